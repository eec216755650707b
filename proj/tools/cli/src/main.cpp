#include "hypereval/cli.hpp"

int main(int argc, char** argv) { return hypereval::cli::main(argc, argv); }
