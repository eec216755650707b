#include <fstream>

#include "common.hpp"
#include "hypereval/error.hpp"
#include "hypereval/wordnet.hpp"

namespace hypereval::cli {
namespace {

Command hierarchy_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("hierarchy", "Validate a hierarchy and print its statistics");
  struct State {
    GraphFlags graph;
    std::optional<std::uint32_t> max_leaf_distance;
    std::string out;
  };
  auto st = std::make_shared<State>();
  add_graph_flags(cmd, st->graph);
  cmd->add_option("--max-leaf-distance", st->max_leaf_distance,
                  "List evaluation synsets whose closest leaf is at most this many edges below");
  cmd->add_option("-o,--out", st->out, "Output path (default stdout)");

  return {cmd, [st, &io] {
    const auto graph = load_graph(st->graph);
    nlohmann::ordered_json j;
    if (st->max_leaf_distance) {
      j["max_leaf_distance"] = *st->max_leaf_distance;
      auto& rows = j["synsets"] = nlohmann::ordered_json::array();
      for (const auto s : synsets_within_leaf_distance(graph, *st->max_leaf_distance)) {
        const auto lemmas = graph.lemmas(s);
        rows.push_back({{"synset", s.str()},
                        {"lemma", lemmas.empty() ? std::string() : display_lemma(lemmas.front())},
                        {"leaf_distance", graph.leaf_distance(s)}});
      }
    } else {
      std::size_t eligible = 0;
      for (const auto s : graph.evaluation_set()) eligible += graph.subtree(s).size() > 1 ? 1 : 0;
      j["nodes"] = graph.node_count();
      j["edges"] = graph.edge_count();
      j["leaves"] = graph.leaf_count();
      j["evaluation_synsets"] = graph.evaluation_set().size();
      j["scs_eligible"] = eligible;
      j["max_depth"] = graph.max_depth();
      j["root"] = graph.root().str();
      j["scs_normalizer"] = scs_normalizer(graph, 1, NormalizerBound::subtree);
    }
    emit(st->out, io.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }};
}

Command import_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("import", "Build hierarchy files from a WordNet data.noun and a wnid list");
  struct State {
    std::string data_noun;
    std::string wnids;
    std::string out_dir;
    bool no_instance = false;
  };
  auto st = std::make_shared<State>();
  cmd->add_option("--data-noun", st->data_noun, "WordNet 3.0 data.noun")->required();
  cmd->add_option("--wnids", st->wnids, "Leaf wnids in class-index order, one per line")->required();
  cmd->add_option("--out-dir", st->out_dir, "Directory for edges.txt, leaves.txt, lemmas.txt")->required();
  cmd->add_flag("--no-instance-hypernyms", st->no_instance, "Ignore @i pointers");

  return {cmd, [st, &io] {
    const auto nouns = WordNetNouns::load(st->data_noun);
    const auto leaves = read_wnid_list(st->wnids);
    WordNetImportOptions options;
    options.include_instance_hypernyms = !st->no_instance;
    const auto graph = import_wordnet_hierarchy(nouns, leaves, options);

    std::error_code ec;
    std::filesystem::create_directories(st->out_dir, ec);
    if (ec) throw IoError("cannot create " + st->out_dir + ": " + ec.message());
    const std::filesystem::path dir(st->out_dir);
    emit((dir / "edges.txt").string(), io.out, [&](std::ostream& os) { write_edge_file(graph, os); });
    emit((dir / "leaves.txt").string(), io.out, [&](std::ostream& os) { write_leaf_map(graph, os); });
    emit((dir / "lemmas.txt").string(), io.out, [&](std::ostream& os) { write_lemma_file(graph, os); });
    io.err << "imported " << graph.node_count() << " nodes, " << graph.leaf_count() << " leaves, "
           << graph.evaluation_set().size() << " evaluation synsets\n";
  }};
}

Command prompts_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("prompts", "Write the prompt manifest (JSONL) for the evaluation set");
  struct State {
    GraphFlags graph;
    std::string out;
  };
  auto st = std::make_shared<State>();
  add_graph_flags(cmd, st->graph);
  cmd->add_option("-o,--out", st->out, "Output path (default stdout)");
  return {cmd, [st, &io] {
    const auto manifest = prompt_manifest(load_graph(st->graph));
    emit(st->out, io.out, [&](std::ostream& os) { write_prompt_manifest(manifest, os); });
  }};
}

}  // namespace

void register_graph_commands(CLI::App& app, Streams& io, RunnerList& runners) {
  for (auto* make : {&hierarchy_command, &import_command, &prompts_command}) runners.push_back(make(app, io));
}

}  // namespace hypereval::cli
