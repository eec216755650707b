#include "hypereval/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hypereval/error.hpp"
#include "hypereval/parallel.hpp"

namespace hypereval {
namespace {

__extension__ using uint128 = unsigned __int128;

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
// Substream for per-synset draws; sample indices stay below 2^32.
constexpr std::uint64_t kSynsetStream = 1ULL << 32;
constexpr std::uint64_t kDifficultyKey = 0x6469666669637974ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Fills `out[i] = exp(x[i] - max)` and returns the sum.
double exp_normalizer(std::vector<double>& x) {
  const double hi = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (auto& v : x) {
    v = std::exp(v - hi);
    total += v;
  }
  return total;
}

struct SynsetPlan {
  std::vector<std::uint32_t> order;  // seeded permutation of A(s)
  std::vector<std::uint32_t> known;  // class indices
  std::vector<double> preference;    // aligned with `known`
  std::vector<std::uint32_t> outside;
  std::uint32_t fixed_leaf = 0;
  double inside_mass = 1.0;
  double sharpness = 1.0;  // scales the weights on the known leaves
};

SynsetPlan plan_synset(const HierarchyGraph& graph, const CompetenceProfile& profile, SynsetId s,
                       std::size_t* clamped) {
  const auto& subtree = graph.subtree(s);
  const auto seed = static_cast<std::uint64_t>(profile.seed);
  CounterRng rng(seed, s.offset(), kSynsetStream);
  SynsetPlan plan;

  std::vector<std::uint32_t> leaves = subtree.leaf_indices;
  // Fisher-Yates driven by the keyed stream.
  for (std::size_t i = leaves.size(); i > 1; --i) {
    std::swap(leaves[i - 1], leaves[rng.below(i)]);
  }
  plan.fixed_leaf = leaves.front();
  plan.order = leaves;

  std::size_t coverage = leaves.size();
  if (profile.coverage) {
    if (*profile.coverage > leaves.size()) {
      if (clamped) ++*clamped;
    } else {
      coverage = *profile.coverage;
    }
  }
  plan.known.assign(leaves.begin(), leaves.begin() + static_cast<std::ptrdiff_t>(coverage));
  const double width = profile.kind == ProfileKind::concentrated ? 3.0 : 1.0;
  plan.preference.resize(plan.known.size());
  for (auto& p : plan.preference) p = width * rng.normal();

  const std::size_t n_classes = graph.leaf_count();
  plan.outside.reserve(n_classes - subtree.size());
  for (std::uint32_t c = 0; c < n_classes; ++c) {
    if (!subtree.contains(c)) plan.outside.push_back(c);
  }

  double mass = profile.in_subtree_mass;
  if (const auto it = profile.synset_in_subtree_mass.find(s); it != profile.synset_in_subtree_mass.end()) {
    mass = it->second;
  }
  if (profile.difficulty > 0.0 && mass > 0.0 && mass < 1.0) {
    CounterRng trait(kDifficultyKey, s.offset(), 0);
    mass = sigmoid(logit(mass) + profile.difficulty * trait.normal());
  }
  if (profile.difficulty > 0.0) {
    // Hard concepts also differ in how spread out their samples are.
    CounterRng trait(kDifficultyKey, s.offset(), 1);
    plan.sharpness = std::exp(0.5 * profile.difficulty * trait.normal());
  }
  plan.inside_mass = plan.outside.empty() ? 1.0 : std::pow(mass, 1.0 / profile.concentration);
  return plan;
}

void soft_row(const CompetenceProfile& profile, const SynsetPlan& plan, CounterRng& rng, std::vector<double>& row,
              std::vector<double>& scratch) {
  std::fill(row.begin(), row.end(), 0.0);

  scratch.resize(plan.known.size());
  for (std::size_t k = 0; k < plan.known.size(); ++k) {
    scratch[k] = plan.sharpness * (profile.concentration * plan.preference[k] + profile.noise_scale * rng.normal());
  }
  double total = exp_normalizer(scratch);
  for (std::size_t k = 0; k < plan.known.size(); ++k) {
    row[plan.known[k]] = plan.inside_mass * scratch[k] / total;
  }

  const double rest = 1.0 - plan.inside_mass;
  if (plan.outside.empty() || rest <= 0.0) return;
  scratch.resize(plan.outside.size());
  for (auto& v : scratch) v = rng.normal();
  total = exp_normalizer(scratch);
  for (std::size_t k = 0; k < plan.outside.size(); ++k) {
    row[plan.outside[k]] = rest * scratch[k] / total;
  }
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) noexcept
    : key_(mix64(mix64(mix64(seed) ^ (stream + kGolden)) ^ (substream * kGolden + 1))) {}

std::uint64_t CounterRng::next() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept {
  // 53 random bits, shifted by half an ulp to exclude 0.
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift with rejection.
  for (;;) {
    const std::uint64_t x = next();
    const auto m = static_cast<uint128>(x) * bound;
    const auto low = static_cast<std::uint64_t>(m);
    if (low >= bound || low >= (-bound) % bound) return static_cast<std::uint64_t>(m >> 64);
  }
}

double CounterRng::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ProfileKind parse_profile_kind(std::string_view text) {
  if (text == "perfect") return ProfileKind::perfect;
  if (text == "collapsed") return ProfileKind::collapsed;
  if (text == "ignorant") return ProfileKind::ignorant;
  if (text == "mixture") return ProfileKind::mixture;
  if (text == "concentrated") return ProfileKind::concentrated;
  throw ValidationError("unknown profile kind '" + std::string(text) +
                        "' (perfect, collapsed, ignorant, mixture, concentrated)");
}

std::string_view to_string(ProfileKind kind) noexcept {
  switch (kind) {
    case ProfileKind::perfect: return "perfect";
    case ProfileKind::collapsed: return "collapsed";
    case ProfileKind::ignorant: return "ignorant";
    case ProfileKind::mixture: return "mixture";
    case ProfileKind::concentrated: return "concentrated";
  }
  return "mixture";
}

void CompetenceProfile::validate() const {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in_unit(in_subtree_mass)) throw ValidationError("in_subtree_mass must lie in [0, 1]");
  for (const auto& [s, m] : synset_in_subtree_mass) {
    if (!in_unit(m)) throw ValidationError("in_subtree_mass for " + s.str() + " must lie in [0, 1]");
  }
  if (!std::isfinite(concentration) || concentration <= 0.0) throw ValidationError("concentration must be > 0");
  if (coverage && *coverage < 1) throw ValidationError("coverage must be >= 1 or 'all'");
  if (!std::isfinite(noise_scale) || noise_scale < 0.0) throw ValidationError("noise_scale must be >= 0");
  if (!std::isfinite(difficulty) || difficulty < 0.0) throw ValidationError("difficulty must be >= 0");
}

CompetenceProfile parse_profile(const KeyValueConfig& config) {
  CompetenceProfile p;
  static const std::string kOverride = "in_subtree_mass.";
  for (const auto& [key, value] : config.entries()) {
    if (key == "kind") {
      p.kind = parse_profile_kind(value);
    } else if (key == "in_subtree_mass") {
      p.in_subtree_mass = *config.get_double(key);
    } else if (key == "concentration") {
      p.concentration = *config.get_double(key);
    } else if (key == "coverage") {
      if (value == "all") {
        p.coverage.reset();
      } else {
        const auto c = *config.get_int(key);
        if (c < 1) throw ValidationError("coverage must be >= 1 or 'all'");
        p.coverage = static_cast<std::size_t>(c);
      }
    } else if (key == "noise_scale") {
      p.noise_scale = *config.get_double(key);
    } else if (key == "difficulty") {
      p.difficulty = *config.get_double(key);
    } else if (key == "seed") {
      p.seed = *config.get_int(key);
    } else if (key.rfind(kOverride, 0) == 0) {
      const auto id = SynsetId::parse(std::string_view(key).substr(kOverride.size()));
      p.synset_in_subtree_mass[id] = *config.get_double(key);
    } else {
      throw ValidationError("unknown profile key '" + key + "'");
    }
  }
  p.validate();
  return p;
}

CompetenceProfile load_profile(const std::filesystem::path& path) {
  return parse_profile(KeyValueConfig::load(path));
}

std::string profile_to_config(const CompetenceProfile& profile) {
  std::ostringstream out;
  out.precision(17);
  out << "kind = " << to_string(profile.kind) << '\n'
      << "in_subtree_mass = " << profile.in_subtree_mass << '\n'
      << "concentration = " << profile.concentration << '\n'
      << "coverage = " << (profile.coverage ? std::to_string(*profile.coverage) : std::string("all")) << '\n'
      << "noise_scale = " << profile.noise_scale << '\n'
      << "difficulty = " << profile.difficulty << '\n'
      << "seed = " << profile.seed << '\n';
  std::map<SynsetId, double> overrides(profile.synset_in_subtree_mass.begin(),
                                       profile.synset_in_subtree_mass.end());
  for (const auto& [s, m] : overrides) out << "in_subtree_mass." << s << " = " << m << '\n';
  return out.str();
}

PredictionSet simulate(const HierarchyGraph& graph, const CompetenceProfile& profile, std::size_t n_samples,
                       const SimulationOptions& options, SimulationStats* stats) {
  profile.validate();
  if (n_samples == 0) throw ValidationError("n_samples must be >= 1");
  if (n_samples > (1ULL << 32)) throw ValidationError("n_samples exceeds the sample index range");

  const auto eval = graph.evaluation_set();
  const std::size_t n_classes = graph.leaf_count();
  const auto seed = static_cast<std::uint64_t>(profile.seed);
  std::vector<SynsetPredictions> out(eval.size());
  std::vector<std::size_t> clamped(eval.size(), 0);

  parallel_for(eval.size(), options.jobs, [&](std::size_t i) {
    const SynsetId s = eval[i];
    const SynsetPlan plan = plan_synset(graph, profile, s, &clamped[i]);
    auto& target = out[i];
    target.sample_indices.resize(n_samples);
    target.values.assign(n_samples * n_classes, 0.0f);
    std::vector<double> row(n_classes);
    std::vector<double> scratch;

    for (std::size_t j = 0; j < n_samples; ++j) {
      target.sample_indices[j] = static_cast<std::uint32_t>(j);
      float* dst = target.values.data() + j * n_classes;
      CounterRng rng(seed, s.offset(), j);
      switch (profile.kind) {
        case ProfileKind::perfect: dst[plan.order[j % plan.order.size()]] = 1.0f; break;
        case ProfileKind::collapsed: dst[plan.fixed_leaf] = 1.0f; break;
        case ProfileKind::ignorant: dst[rng.below(n_classes)] = 1.0f; break;
        case ProfileKind::mixture:
        case ProfileKind::concentrated:
          soft_row(profile, plan, rng, row, scratch);
          for (std::size_t c = 0; c < n_classes; ++c) dst[c] = static_cast<float>(row[c]);
          break;
      }
    }
  });

  PredictionSet set;
  set.model_id = options.model_id;
  set.seed = profile.seed;
  set.kind = OutputKind::probabilities;
  set.n_classes = n_classes;
  for (std::size_t i = 0; i < eval.size(); ++i) set.synsets.emplace(eval[i], std::move(out[i]));
  if (stats) {
    stats->clamped_coverage = 0;
    for (const auto c : clamped) stats->clamped_coverage += c;
  }
  return set;
}

std::vector<MetricReport> guidance_sweep(const HierarchyGraph& graph, const CompetenceProfile& base,
                                         std::span<const double> concentrations, std::size_t n_samples,
                                         const EvaluateOptions& evaluate_options) {
  if (concentrations.empty()) throw ValidationError("sweep needs at least one concentration value");
  std::vector<MetricReport> reports;
  reports.reserve(concentrations.size());
  for (const double c : concentrations) {
    CompetenceProfile profile = base;
    profile.concentration = c;
    std::ostringstream id;
    id << "sweep-c" << c;
    SimulationOptions sim;
    sim.jobs = evaluate_options.jobs;
    sim.model_id = id.str();
    reports.push_back(evaluate(graph, simulate(graph, profile, n_samples, sim), evaluate_options));
  }
  return reports;
}

}  // namespace hypereval
