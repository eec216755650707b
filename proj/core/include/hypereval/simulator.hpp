#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hypereval/config.hpp"
#include "hypereval/hierarchy.hpp"
#include "hypereval/metrics.hpp"
#include "hypereval/predictions.hpp"

namespace hypereval {

/// Counter-based generator: the stream is a pure function of
/// (seed, stream, substream, draw index), so synsets and samples can be
/// generated in any order or on any thread with identical results.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Uniform integer in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

enum class ProfileKind { perfect, collapsed, ignorant, mixture, concentrated };

ProfileKind parse_profile_kind(std::string_view text);
std::string_view to_string(ProfileKind kind) noexcept;

/// Parametric stand-in for a generator + classifier pipeline.
///
///  - perfect: one-hot on a uniform leaf of A(s), drawn without replacement
///    (samples walk a seeded permutation of A(s), wrapping around)
///  - collapsed: one-hot on a fixed leaf of A(s)
///  - ignorant: one-hot on a uniform leaf of the whole label set
///  - mixture / concentrated: soft rows. The subtree receives mass
///    `in_subtree_mass^(1/concentration)`, spread over `coverage` known
///    leaves with weights exp(concentration * preference + noise_scale * z);
///    the rest is spread over classes outside A(s). Preferences are fixed per
///    synset (standard normal for mixture, three times wider for
///    concentrated), z is fresh per sample.
///
/// `difficulty` spreads the subtree mass across synsets on the logit scale
/// and scales each synset's leaf weights (the exponent above) by
/// exp(difficulty / 2 * z). Both are keyed by synset alone, so runs with different seeds agree on which
/// concepts are hard.
struct CompetenceProfile {
  ProfileKind kind = ProfileKind::mixture;
  double in_subtree_mass = 0.8;
  double concentration = 1.0;
  /// Known leaves per synset; nullopt means all of A(s).
  std::optional<std::size_t> coverage;
  double noise_scale = 1.0;
  double difficulty = 0.0;
  std::int64_t seed = 0;
  /// Per-synset replacement for `in_subtree_mass`.
  std::unordered_map<SynsetId, double> synset_in_subtree_mass;

  /// Throws ValidationError for out-of-range parameters.
  void validate() const;
};

/// Keys: kind, in_subtree_mass, concentration, coverage (integer or `all`),
/// noise_scale, difficulty, seed, and `in_subtree_mass.<wnid>` overrides.
CompetenceProfile parse_profile(const KeyValueConfig& config);
CompetenceProfile load_profile(const std::filesystem::path& path);
std::string profile_to_config(const CompetenceProfile& profile);

struct SimulationOptions {
  std::size_t jobs = 1;
  std::string model_id = "simulated";
};

struct SimulationStats {
  /// Synsets whose requested coverage exceeded |A(s)| and was clamped.
  std::size_t clamped_coverage = 0;
};

/// Probability rows for every evaluation synset. Deterministic in
/// (graph, profile, n_samples); independent of `options.jobs`.
PredictionSet simulate(const HierarchyGraph& graph, const CompetenceProfile& profile, std::size_t n_samples,
                       const SimulationOptions& options = {}, SimulationStats* stats = nullptr);

/// One simulate + evaluate per concentration value, in the given order.
std::vector<MetricReport> guidance_sweep(const HierarchyGraph& graph, const CompetenceProfile& base,
                                         std::span<const double> concentrations, std::size_t n_samples,
                                         const EvaluateOptions& evaluate_options = {});

}  // namespace hypereval
