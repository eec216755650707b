#include "hypereval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hypereval/error.hpp"
#include "hypereval/numeric.hpp"

namespace hypereval {
namespace {

std::optional<double> metric_value(const SynsetMetrics& m, MetricKind metric) {
  if (metric == MetricKind::isp) return m.isp;
  return m.scs;
}

bool ascending(const RankedSynset& a, const RankedSynset& b) {
  if (a.value != b.value) return a.value < b.value;
  return a.synset < b.synset;
}

std::vector<RankedSynset> take_worst(std::vector<RankedSynset> values, std::size_t k) {
  if (k == 0) throw ValidationError("k must be >= 1");
  std::sort(values.begin(), values.end(), ascending);
  values.resize(std::min(k, values.size()));
  return values;
}

void require_same_synsets(const MetricReport& a, const MetricReport& b) {
  const bool same = a.synsets.size() == b.synsets.size() &&
                    std::equal(a.synsets.begin(), a.synsets.end(), b.synsets.begin(),
                               [](const auto& x, const auto& y) { return x.synset == y.synset; });
  if (!same) {
    throw ValidationError("reports '" + a.model_id + "' and '" + b.model_id + "' cover different synsets");
  }
}

}  // namespace

std::vector<RankedSynset> worst_synsets(const MetricReport& report, MetricKind metric, std::size_t k) {
  std::vector<RankedSynset> values;
  for (const auto& m : report.synsets) {
    if (const auto v = metric_value(m, metric)) values.push_back({m.synset, *v});
  }
  return take_worst(std::move(values), k);
}

std::vector<RankedSynset> worst_synsets(std::span<const MetricReport> reports, MetricKind metric, std::size_t k) {
  if (reports.empty()) throw ValidationError("no reports to average");
  std::map<SynsetId, std::pair<CompensatedSum, std::size_t>> sums;
  for (const auto& r : reports) {
    for (const auto& m : r.synsets) {
      if (const auto v = metric_value(m, metric)) {
        auto& [sum, n] = sums[m.synset];
        sum.add(*v);
        ++n;
      }
    }
  }
  std::vector<RankedSynset> values;
  for (const auto& [s, entry] : sums) {
    if (entry.second == reports.size()) {
      values.push_back({s, entry.first.value() / static_cast<double>(reports.size())});
    }
  }
  return take_worst(std::move(values), k);
}

std::vector<RankedSynset> best_synsets(const MetricReport& report, MetricKind metric, std::size_t k) {
  auto all = worst_synsets(report, metric, std::max<std::size_t>(report.synsets.size(), 1));
  std::reverse(all.begin(), all.end());
  if (k == 0) throw ValidationError("k must be >= 1");
  all.resize(std::min(k, all.size()));
  return all;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ModelDiff model_diff(const MetricReport& a, const MetricReport& b, MetricKind metric) {
  require_same_synsets(a, b);
  ModelDiff diff;
  for (std::size_t i = 0; i < a.synsets.size(); ++i) {
    const auto va = metric_value(a.synsets[i], metric);
    const auto vb = metric_value(b.synsets[i], metric);
    if (va && vb) diff.ranked.push_back({a.synsets[i].synset, *va - *vb});
  }
  std::sort(diff.ranked.begin(), diff.ranked.end(), [](const auto& x, const auto& y) {
    if (x.value != y.value) return x.value > y.value;
    return x.synset < y.synset;
  });
  if (diff.ranked.empty()) return diff;

  std::vector<double> sorted;
  sorted.reserve(diff.ranked.size());
  CompensatedSum total;
  for (const auto& r : diff.ranked) {
    sorted.push_back(r.value);
    total.add(r.value);
  }
  std::sort(sorted.begin(), sorted.end());
  auto& s = diff.summary;
  s.mean = total.value() / static_cast<double>(sorted.size());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q05 = quantile_sorted(sorted, 0.05);
  s.q25 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q75 = quantile_sorted(sorted, 0.75);
  s.q95 = quantile_sorted(sorted, 0.95);
  return diff;
}

std::vector<SynsetId> evaluation_descendants(const HierarchyGraph& graph, SynsetId root) {
  std::set<SynsetId> seen{root};
  std::vector<SynsetId> stack{root};
  while (!stack.empty()) {
    const auto s = stack.back();
    stack.pop_back();
    for (const auto c : graph.children(s)) {
      if (seen.insert(c).second) stack.push_back(c);
    }
  }
  std::vector<SynsetId> out;
  for (const auto s : seen) {
    if (!graph.is_leaf(s)) out.push_back(s);
  }
  return out;
}

std::vector<SubtreeAggregate> subtree_report(const MetricReport& report, const HierarchyGraph& graph,
                                             std::span<const SynsetId> roots) {
  std::vector<SubtreeAggregate> out;
  out.reserve(roots.size());
  for (const auto root : roots) {
    if (!graph.contains(root) || graph.is_leaf(root)) {
      throw ValidationError("subtree root " + root.str() + " is not an evaluation synset");
    }
    SubtreeAggregate agg;
    agg.root = root;
    CompensatedSum isp;
    CompensatedSum scs;
    for (const auto s : evaluation_descendants(graph, root)) {
      const auto* m = report.find(s);
      if (m == nullptr) throw ValidationError("report has no metrics for " + s.str() + " under " + root.str());
      isp.add(m->isp);
      ++agg.n_synsets;
      if (m->scs) {
        scs.add(*m->scs);
        ++agg.n_scs;
      }
    }
    agg.mean_isp = isp.value() / static_cast<double>(agg.n_synsets);
    agg.mean_scs = agg.n_scs == 0 ? 0.0 : scs.value() / static_cast<double>(agg.n_scs);
    agg.aggregate_isp = report.isp_normalizer > 0.0 ? agg.mean_isp / report.isp_normalizer : 0.0;
    agg.aggregate_scs = report.scs_normalizer > 0.0 ? agg.mean_scs / report.scs_normalizer : 0.0;
    out.push_back(agg);
  }
  return out;
}

SimilarityResult hyponym_similarity(const EmbeddingTable& embeddings, const HierarchyGraph& graph) {
  SimilarityResult result;
  const auto leaves = graph.leaves();
  for (const auto s : graph.evaluation_set()) {
    const auto* own = embeddings.find(s);
    if (own == nullptr) {
      result.skipped.push_back(s);
      continue;
    }
    HyponymSimilarity h;
    h.synset = s;
    CompensatedSum total;
    for (const auto index : graph.subtree(s).leaf_indices) {
      const auto* leaf = embeddings.find(leaves[index]);
      if (leaf == nullptr) {
        ++h.leaves_missing;
        continue;
      }
      total.add(cosine_similarity(*own, *leaf));
      ++h.leaves_used;
    }
    if (h.leaves_used == 0) {
      result.skipped.push_back(s);
      continue;
    }
    h.mean_cosine = total.value() / static_cast<double>(h.leaves_used);
    result.values.push_back(h);
  }
  return result;
}

Correlation similarity_metric_correlation(std::span<const HyponymSimilarity> similarities, const MetricReport& report,
                                          MetricKind metric, SpearmanMethod method) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& h : similarities) {
    const auto* m = report.find(h.synset);
    if (m == nullptr) continue;
    const auto v = metric_value(*m, metric);
    if (!v) continue;
    x.push_back(h.mean_cosine);
    y.push_back(*v);
  }
  if (x.size() < 3) {
    throw ValidationError("similarities and report share " + std::to_string(x.size()) + " synsets; need at least 3");
  }
  return spearman(x, y, method);
}

}  // namespace hypereval
