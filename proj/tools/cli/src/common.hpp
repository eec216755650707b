#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "hypereval/hierarchy.hpp"
#include "hypereval/metrics.hpp"
#include "hypereval/predictions.hpp"
#include "hypereval/simulator.hpp"
#include "hypereval/stats.hpp"

namespace hypereval::cli {

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

/// Executes a subcommand once parsing has finished.
using Runner = std::function<void()>;
using Command = std::pair<CLI::App*, Runner>;
using RunnerList = std::vector<Command>;

struct GraphFlags {
  std::string edges;
  std::string leaves;
  std::string lemmas;
  long long expected_leaves = 1000;

  bool given() const { return !edges.empty() || !leaves.empty(); }
};

void add_graph_flags(CLI::App* cmd, GraphFlags& flags, bool required = true);
HierarchyGraph load_graph(const GraphFlags& flags);

struct ProfileFlags {
  std::string profile;
  std::optional<std::string> kind;
  std::optional<double> in_subtree_mass;
  std::optional<double> concentration;
  std::optional<std::string> coverage;
  std::optional<double> noise_scale;
  std::optional<double> difficulty;
  std::optional<std::int64_t> seed;
};

void add_profile_flags(CLI::App* cmd, ProfileFlags& flags);
/// Profile file (or a bare kind name), then individual flags on top.
CompetenceProfile resolve_profile(const ProfileFlags& flags);

std::size_t resolve_jobs(long long jobs);

/// Writes through `write` to `path`, or to `fallback` for "" and "-".
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& write);

/// Reads predictions from a file or from `in` for "-".
PredictionSet read_predictions(const std::string& path, std::istream& in, const std::string& format,
                               const PredictionLoadOptions& options);

MetricReport read_report(const std::string& path, std::istream& in);

nlohmann::ordered_json correlation_json(const Correlation& c);
SpearmanMethod parse_spearman_method(const std::string& text);

void register_graph_commands(CLI::App& app, Streams& io, RunnerList& runners);
void register_model_commands(CLI::App& app, Streams& io, RunnerList& runners);
void register_analysis_commands(CLI::App& app, Streams& io, RunnerList& runners);

}  // namespace hypereval::cli
