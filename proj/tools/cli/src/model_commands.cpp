#include <sstream>

#include "common.hpp"
#include "hypereval/error.hpp"
#include "hypereval/report_io.hpp"

namespace hypereval::cli {
namespace {

struct NormalizerFlags {
  std::string mode = "derived";
  std::optional<double> value;
};

void add_normalizer_flags(CLI::App* cmd, NormalizerFlags& flags) {
  cmd->add_option("--normalizer", flags.mode, "SCS normalizer: derived, sample-capped, paper or none")
      ->capture_default_str();
  cmd->add_option("--normalizer-value", flags.value, "Use this SCS normalizer value instead");
}

EvaluateOptions evaluate_options(const NormalizerFlags& flags, long long jobs) {
  EvaluateOptions options;
  options.jobs = resolve_jobs(jobs);
  options.normalizer = parse_normalizer_mode(flags.mode);
  if (flags.value) {
    if (!(*flags.value > 0.0)) throw UsageError("--normalizer-value must be > 0");
    options.normalizer_override = flags.value;
  }
  return options;
}

Command evaluate_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("evaluate", "Score classifier predictions against the hierarchy");
  struct State {
    GraphFlags graph;
    std::string predictions;
    std::string format = "auto";
    NormalizerFlags normalizer;
    long long jobs = 1;
    std::string out;
    std::string csv;
    std::optional<std::string> model_id;
    bool allow_ragged = false;
  };
  auto st = std::make_shared<State>();
  add_graph_flags(cmd, st->graph);
  cmd->add_option("-p,--predictions", st->predictions, "Prediction file, '-' for stdin")->required();
  cmd->add_option("--format", st->format, "Prediction format: auto, jsonl or bin")->capture_default_str();
  add_normalizer_flags(cmd, st->normalizer);
  cmd->add_option("-j,--jobs", st->jobs, "Worker threads, 0 for all cores")->capture_default_str();
  cmd->add_option("-o,--out", st->out, "Report JSON path (default stdout)");
  cmd->add_option("--csv", st->csv, "Also write per-synset CSV here");
  cmd->add_option("--model-id", st->model_id, "Override the model id");
  cmd->add_flag("--allow-ragged", st->allow_ragged, "Accept differing sample counts per synset");

  return {cmd, [st, &io] {
    const auto graph = load_graph(st->graph);
    const auto options = evaluate_options(st->normalizer, st->jobs);
    PredictionLoadOptions load;
    load.n_classes = graph.leaf_count();
    load.model_id = st->model_id;
    load.allow_ragged = st->allow_ragged;
    load.jobs = options.jobs;
    const auto predictions = read_predictions(st->predictions, io.in, st->format, load);
    const auto report = evaluate(graph, predictions, options);
    if (report.degenerate_rows > 0) {
      io.err << "warning: " << report.degenerate_rows
             << " probability rows put no mass in the subtree; treated as uniform for SCS\n";
    }
    emit(st->out, io.out, [&](std::ostream& os) { os << report_to_json(report); });
    if (!st->csv.empty()) emit(st->csv, io.out, [&](std::ostream& os) { write_report_csv(report, os); });
  }};
}

Command simulate_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("simulate", "Generate synthetic predictions from a competence profile");
  struct State {
    GraphFlags graph;
    ProfileFlags profile;
    std::size_t samples = 32;
    std::string format = "jsonl";
    long long jobs = 1;
    std::string out;
    std::string model_id;
  };
  auto st = std::make_shared<State>();
  add_graph_flags(cmd, st->graph);
  add_profile_flags(cmd, st->profile);
  cmd->add_option("-n,--samples", st->samples, "Samples per synset")->capture_default_str();
  cmd->add_option("--format", st->format, "Output format: jsonl or bin")->capture_default_str();
  cmd->add_option("-j,--jobs", st->jobs, "Worker threads, 0 for all cores")->capture_default_str();
  cmd->add_option("-o,--out", st->out, "Output path (default stdout)");
  cmd->add_option("--model-id", st->model_id, "Model id (default: simulated-<kind>)");

  return {cmd, [st, &io] {
    if (st->format != "jsonl" && st->format != "bin") {
      throw UsageError("unknown output format '" + st->format + "' (jsonl, bin)");
    }
    const auto graph = load_graph(st->graph);
    const auto profile = resolve_profile(st->profile);
    SimulationOptions options;
    options.jobs = resolve_jobs(st->jobs);
    options.model_id =
        st->model_id.empty() ? "simulated-" + std::string(to_string(profile.kind)) : st->model_id;
    SimulationStats stats;
    const auto set = simulate(graph, profile, st->samples, options, &stats);
    if (stats.clamped_coverage > 0) {
      io.err << "warning: coverage " << *profile.coverage << " exceeds |A(s)| for " << stats.clamped_coverage
             << " synsets; clamped to the subtree size\n";
    }
    emit(st->out, io.out, [&](std::ostream& os) {
      if (st->format == "bin") {
        write_predictions_binary(set, os);
      } else {
        write_predictions_jsonl(set, os);
      }
    });
  }};
}

Command sweep_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("sweep", "Simulate and evaluate over several concentration values");
  struct State {
    GraphFlags graph;
    ProfileFlags profile;
    std::vector<double> concentrations;
    std::size_t samples = 32;
    NormalizerFlags normalizer;
    long long jobs = 1;
    std::string out;
    std::string out_dir;
  };
  auto st = std::make_shared<State>();
  add_graph_flags(cmd, st->graph);
  add_profile_flags(cmd, st->profile);
  cmd->add_option("-c,--concentrations", st->concentrations, "Concentration values, comma separated")
      ->required()
      ->delimiter(',');
  cmd->add_option("-n,--samples", st->samples, "Samples per synset")->capture_default_str();
  add_normalizer_flags(cmd, st->normalizer);
  cmd->add_option("-j,--jobs", st->jobs, "Worker threads, 0 for all cores")->capture_default_str();
  cmd->add_option("-o,--out", st->out, "Summary JSON path (default stdout)");
  cmd->add_option("--out-dir", st->out_dir, "Write one full report per concentration here");

  return {cmd, [st, &io] {
    const auto graph = load_graph(st->graph);
    const auto profile = resolve_profile(st->profile);
    const auto options = evaluate_options(st->normalizer, st->jobs);
    const auto reports = guidance_sweep(graph, profile, st->concentrations, st->samples, options);

    nlohmann::ordered_json j;
    j["profile"] = std::string(to_string(profile.kind));
    j["seed"] = profile.seed;
    j["n_samples"] = st->samples;
    auto& points = j["points"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
      nlohmann::ordered_json p;
      p["concentration"] = st->concentrations[i];
      p["aggregate_isp"] = reports[i].aggregate_isp;
      p["aggregate_scs"] = reports[i].aggregate_scs;
      p["mean_isp"] = reports[i].mean_isp;
      p["mean_scs"] = reports[i].mean_scs;
      if (!st->out_dir.empty()) {
        std::filesystem::create_directories(st->out_dir);
        const auto path = std::filesystem::path(st->out_dir) / ("report_" + std::to_string(i) + ".json");
        save_report(reports[i], path);
        p["report"] = path.string();
      }
      points.push_back(std::move(p));
    }
    emit(st->out, io.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }};
}

}  // namespace

void register_model_commands(CLI::App& app, Streams& io, RunnerList& runners) {
  for (auto* make : {&evaluate_command, &simulate_command, &sweep_command}) runners.push_back(make(app, io));
}

}  // namespace hypereval::cli
