#include "hypereval/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "hypereval/error.hpp"
#include "hypereval/parallel.hpp"
#include "hypereval/report_io.hpp"

namespace hypereval::cli {

void add_graph_flags(CLI::App* cmd, GraphFlags& flags, bool required) {
  auto* edges = cmd->add_option("--edges", flags.edges, "Hypernym edge file (child parent per line)");
  auto* leaves = cmd->add_option("--leaves", flags.leaves, "Leaf map (class_index wnid lemmas)");
  if (required) {
    edges->required();
    leaves->required();
  }
  cmd->add_option("--lemmas", flags.lemmas, "Lemma file for non-leaf synsets");
  cmd->add_option("--expected-leaves", flags.expected_leaves, "Required leaf count, 0 for any")
      ->capture_default_str();
}

HierarchyGraph load_graph(const GraphFlags& flags) {
  if (flags.edges.empty() || flags.leaves.empty()) throw UsageError("--edges and --leaves are both required");
  HierarchyLoadOptions options;
  if (flags.expected_leaves > 0) {
    options.expected_leaf_count = static_cast<std::size_t>(flags.expected_leaves);
  } else {
    options.expected_leaf_count.reset();
  }
  std::optional<std::filesystem::path> lemmas;
  if (!flags.lemmas.empty()) lemmas = flags.lemmas;
  return load_hierarchy(flags.edges, flags.leaves, lemmas, options);
}

void add_profile_flags(CLI::App* cmd, ProfileFlags& flags) {
  cmd->add_option("--profile", flags.profile, "Profile file, or a kind name for its defaults");
  cmd->add_option("--kind", flags.kind, "perfect, collapsed, ignorant, mixture or concentrated");
  cmd->add_option("--in-subtree-mass", flags.in_subtree_mass, "Mass placed inside A(s), in [0, 1]");
  cmd->add_option("--concentration", flags.concentration, "Sharpness of soft rows (> 0)");
  cmd->add_option("--coverage", flags.coverage, "Known leaves per synset, or 'all'");
  cmd->add_option("--noise-scale", flags.noise_scale, "Per-sample noise (>= 0)");
  cmd->add_option("--difficulty", flags.difficulty, "Per-synset spread of the subtree mass (>= 0)");
  cmd->add_option("--seed", flags.seed, "Random seed (default 0)");
}

CompetenceProfile resolve_profile(const ProfileFlags& flags) {
  CompetenceProfile p;
  if (!flags.profile.empty()) {
    if (std::filesystem::exists(flags.profile)) {
      p = load_profile(flags.profile);
    } else {
      try {
        p.kind = parse_profile_kind(flags.profile);
      } catch (const ValidationError&) {
        throw IoError("cannot open profile " + flags.profile);
      }
    }
  }
  KeyValueConfig overrides;
  if (flags.kind) overrides.set("kind", *flags.kind);
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) {
      std::ostringstream s;
      s.precision(17);
      s << *v;
      overrides.set(key, s.str());
    }
  };
  put("in_subtree_mass", flags.in_subtree_mass);
  put("concentration", flags.concentration);
  put("noise_scale", flags.noise_scale);
  put("difficulty", flags.difficulty);
  if (flags.coverage) overrides.set("coverage", *flags.coverage);
  if (flags.seed) overrides.set("seed", std::to_string(*flags.seed));

  // Reparse so flag values get the same checks as file values.
  auto merged = KeyValueConfig::parse(profile_to_config(p), "profile");
  for (const auto& [k, v] : overrides.entries()) merged.set(k, v);
  return parse_profile(merged);
}

std::size_t resolve_jobs(long long jobs) {
  if (jobs < 0) throw UsageError("--jobs must be >= 0");
  return jobs == 0 ? default_jobs() : static_cast<std::size_t>(jobs);
}

void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    fallback.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path);
  write(file);
  file.flush();
  if (!file) throw IoError("error writing " + path);
}

PredictionSet read_predictions(const std::string& path, std::istream& in, const std::string& format,
                               const PredictionLoadOptions& options) {
  if (format != "auto" && format != "jsonl" && format != "bin") {
    throw UsageError("unknown prediction format '" + format + "' (auto, jsonl, bin)");
  }
  if (path != "-") {
    if (format == "auto") return load_predictions(path, options);
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path);
    PredictionLoadOptions named = options;
    if (!named.model_id) named.model_id = std::filesystem::path(path).stem().string();
    return format == "bin" ? load_predictions_binary(file, named) : load_predictions_jsonl(file, named);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::istringstream data(buffer.str());
  const bool binary = format == "bin" || (format == "auto" && buffer.str().rfind("HLPR", 0) == 0);
  return binary ? load_predictions_binary(data, options) : load_predictions_jsonl(data, options);
}

MetricReport read_report(const std::string& path, std::istream& in) {
  if (path != "-") return load_report(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return report_from_json(buffer.str());
}

nlohmann::ordered_json correlation_json(const Correlation& c) {
  nlohmann::ordered_json j;
  j["rho"] = c.rho;
  j["p_value"] = c.p_value;
  j["n"] = c.n;
  return j;
}

SpearmanMethod parse_spearman_method(const std::string& text) {
  if (text == "automatic" || text == "auto") return SpearmanMethod::automatic;
  if (text == "t" || text == "t-approximation") return SpearmanMethod::t_approximation;
  if (text == "exact") return SpearmanMethod::exact;
  throw UsageError("unknown p-value method '" + text + "' (automatic, t, exact)");
}

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app("Hypernymy metrics (In-Subtree Probability, Subtree Coverage Score) for text-to-image models",
               "hypereval");
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "Defaults file: key = value lines, [subcommand] sections");
  app.set_version_flag("--version", std::string(HYPEREVAL_VERSION));

  Streams io{in, out, err};
  RunnerList runners;
  register_graph_commands(app, io, runners);
  register_model_commands(app, io, runners);
  register_analysis_commands(app, io, runners);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (auto& [cmd, runner] : runners) {
      if (cmd->parsed()) runner();
    }
    return kOk;
  } catch (const Error& e) {
    err << "hypereval: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::usage: return kUsage;
      case ErrorKind::validation: return kValidation;
      case ErrorKind::io: return kIo;
    }
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "hypereval: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "hypereval: " << e.what() << '\n';
    return kValidation;
  }
}

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cin, std::cout, std::cerr);
}

}  // namespace hypereval::cli
