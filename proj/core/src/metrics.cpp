#include "hypereval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hypereval/error.hpp"
#include "hypereval/numeric.hpp"
#include "hypereval/parallel.hpp"

namespace hypereval {

double in_subtree_probability(const SampleRows& rows, const ClassifiableSubtree& subtree) {
  const std::size_t n = rows.rows();
  if (n == 0) throw ValidationError("no samples for " + subtree.synset.str());
  CompensatedSum total;
  for (std::size_t i = 0; i < n; ++i) total.add(subtree_mass(rows.row(i), rows.kind, subtree));
  return std::clamp(total.value() / static_cast<double>(n), 0.0, 1.0);
}

double coverage_divergence(const SampleRows& rows, const ClassifiableSubtree& subtree,
                           std::size_t* degenerate_rows) {
  const std::size_t n = rows.rows();
  if (n == 0) throw ValidationError("no samples for " + subtree.synset.str());
  const std::size_t k = subtree.size();

  std::vector<std::vector<double>> conditional;
  conditional.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    conditional.push_back(hyponym_distribution(rows.row(i), rows.kind, subtree, degenerate_rows));
  }

  // Average measured relative to the first row, so identical rows give an
  // average that is bitwise equal to them.
  std::vector<double> average(k);
  for (std::size_t j = 0; j < k; ++j) {
    CompensatedSum delta;
    for (std::size_t i = 1; i < n; ++i) delta.add(conditional[i][j] - conditional[0][j]);
    average[j] = conditional[0][j] + delta.value() / static_cast<double>(n);
  }

  CompensatedSum total;
  for (const auto& p : conditional) {
    CompensatedSum kl;
    for (std::size_t j = 0; j < k; ++j) {
      if (p[j] > 0.0) kl.add(p[j] * std::log(p[j] / average[j]));
    }
    total.add(kl.value());
  }
  // KL is non-negative; clamp rounding residue.
  return std::max(0.0, total.value() / static_cast<double>(n));
}

std::optional<double> subtree_coverage_score(const SampleRows& rows, const ClassifiableSubtree& subtree,
                                             std::size_t* degenerate_rows) {
  if (subtree.size() <= 1) return std::nullopt;
  return coverage_divergence(rows, subtree, degenerate_rows);
}

SynsetMetrics evaluate_synset(const SampleRows& rows, const ClassifiableSubtree& subtree) {
  SynsetMetrics m;
  m.synset = subtree.synset;
  m.n_samples = rows.rows();
  m.subtree_size = subtree.size();
  m.isp = in_subtree_probability(rows, subtree);
  m.scs = subtree_coverage_score(rows, subtree, &m.degenerate_rows);
  return m;
}

NormalizerMode parse_normalizer_mode(std::string_view text) {
  if (text == "derived") return NormalizerMode::derived;
  if (text == "sample-capped" || text == "sample_capped") return NormalizerMode::sample_capped;
  if (text == "paper") return NormalizerMode::paper;
  if (text == "none") return NormalizerMode::none;
  throw UsageError("unknown normalizer '" + std::string(text) + "' (derived, sample-capped, paper, none)");
}

std::string_view to_string(NormalizerMode mode) noexcept {
  switch (mode) {
    case NormalizerMode::derived: return "derived";
    case NormalizerMode::sample_capped: return "sample-capped";
    case NormalizerMode::paper: return "paper";
    case NormalizerMode::none: return "none";
  }
  return "derived";
}

double scs_normalizer(const HierarchyGraph& graph, std::size_t n_samples, NormalizerBound bound) {
  if (n_samples == 0) throw ValidationError("scs_normalizer needs at least one sample");
  CompensatedSum total;
  std::size_t count = 0;
  for (const auto s : graph.evaluation_set()) {
    const std::size_t size = graph.subtree(s).size();
    if (size <= 1) continue;
    const std::size_t cap = bound == NormalizerBound::subtree ? size : std::min(size, n_samples);
    total.add(std::log(static_cast<double>(cap)));
    ++count;
  }
  return count == 0 ? 0.0 : total.value() / static_cast<double>(count);
}

const SynsetMetrics* MetricReport::find(SynsetId s) const {
  const auto it = std::lower_bound(synsets.begin(), synsets.end(), s,
                                   [](const SynsetMetrics& m, SynsetId id) { return m.synset < id; });
  return (it != synsets.end() && it->synset == s) ? &*it : nullptr;
}

MetricReport aggregate(std::vector<SynsetMetrics> metrics, double scs_norm, double isp_norm) {
  std::sort(metrics.begin(), metrics.end(), [](const auto& a, const auto& b) { return a.synset < b.synset; });
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    if (metrics[i].synset == metrics[i - 1].synset) {
      throw ValidationError("duplicate metrics for synset " + metrics[i].synset.str());
    }
  }
  MetricReport report;
  CompensatedSum isp;
  CompensatedSum scs;
  std::optional<std::size_t> rows;
  bool ragged = false;
  for (const auto& m : metrics) {
    isp.add(m.isp);
    if (m.scs) {
      scs.add(*m.scs);
      ++report.scs_included;
    } else {
      ++report.scs_excluded;
    }
    report.degenerate_rows += m.degenerate_rows;
    if (rows && *rows != m.n_samples) ragged = true;
    rows = m.n_samples;
  }
  report.isp_count = metrics.size();
  report.n_samples = ragged ? std::nullopt : rows;
  report.mean_isp = metrics.empty() ? 0.0 : isp.value() / static_cast<double>(metrics.size());
  report.mean_scs = report.scs_included == 0 ? 0.0 : scs.value() / static_cast<double>(report.scs_included);
  report.isp_normalizer = isp_norm;
  report.scs_normalizer = scs_norm;
  report.aggregate_isp = isp_norm > 0.0 ? report.mean_isp / isp_norm : 0.0;
  report.aggregate_scs = scs_norm > 0.0 ? report.mean_scs / scs_norm : 0.0;
  report.synsets = std::move(metrics);
  return report;
}

MetricReport aggregate(std::vector<SynsetMetrics> metrics, double scs_norm, std::span<const SynsetId> expected,
                       double isp_norm) {
  std::set<SynsetId> have;
  for (const auto& m : metrics) have.insert(m.synset);
  for (const auto s : expected) {
    if (!have.count(s)) throw ValidationError("missing metrics for synset " + s.str());
  }
  return aggregate(std::move(metrics), scs_norm, isp_norm);
}

std::vector<SynsetMetrics> evaluate_synsets(const HierarchyGraph& graph, const PredictionSet& predictions,
                                            std::size_t jobs) {
  if (predictions.n_classes != graph.leaf_count()) {
    throw ValidationError("prediction rows have " + std::to_string(predictions.n_classes) +
                          " classes but the hierarchy has " + std::to_string(graph.leaf_count()) + " leaves");
  }
  const auto eval = graph.evaluation_set();
  std::vector<const SynsetPredictions*> inputs(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    inputs[i] = predictions.find(eval[i]);
    if (inputs[i] == nullptr) {
      throw ValidationError("no predictions for evaluation synset " + eval[i].str());
    }
  }
  std::vector<SynsetMetrics> out(eval.size());
  parallel_for(eval.size(), jobs, [&](std::size_t i) {
    out[i] = evaluate_synset(sample_rows(predictions, *inputs[i]), graph.subtree(eval[i]));
  });
  return out;
}

MetricReport evaluate(const HierarchyGraph& graph, const PredictionSet& predictions,
                      const EvaluateOptions& options) {
  auto metrics = evaluate_synsets(graph, predictions, options.jobs);

  std::size_t max_rows = 1;
  for (const auto& m : metrics) max_rows = std::max(max_rows, m.n_samples);
  double norm = 1.0;
  switch (options.normalizer) {
    case NormalizerMode::derived: norm = scs_normalizer(graph, max_rows, NormalizerBound::subtree); break;
    case NormalizerMode::sample_capped:
      norm = scs_normalizer(graph, max_rows, NormalizerBound::sample_capped);
      break;
    case NormalizerMode::paper: norm = kPublishedScsNormalizer; break;
    case NormalizerMode::none: norm = 1.0; break;
  }
  if (options.normalizer_override && options.normalizer != NormalizerMode::none) {
    norm = *options.normalizer_override;
  }

  auto report = aggregate(std::move(metrics), norm, graph.evaluation_set());
  report.model_id = predictions.model_id;
  report.seed = predictions.seed;
  report.normalizer_mode = std::string(to_string(options.normalizer));
  return report;
}

}  // namespace hypereval
