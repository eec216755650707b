#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "hypereval/analysis.hpp"
#include "hypereval/error.hpp"
#include "hypereval/simulator.hpp"
#include "test_support.hpp"

namespace hypereval {
namespace {

SynsetId id(const char* text) { return SynsetId::parse(text); }

SynsetMetrics metric(std::uint32_t s, double isp, std::optional<double> scs = {}) {
  SynsetMetrics m;
  m.synset = SynsetId(s);
  m.isp = isp;
  m.scs = scs;
  m.n_samples = 4;
  m.subtree_size = scs ? 3 : 1;
  return m;
}

MetricReport report_of(std::vector<SynsetMetrics> metrics, double scs_norm = 1.0) {
  return aggregate(std::move(metrics), scs_norm);
}

TEST(Worst, LowestFirst) {
  const auto r = report_of({metric(1, 0.1, 0.3), metric(2, 0.5, 0.2), metric(3, 0.9)});
  const auto w = worst_synsets(r, MetricKind::isp, 1);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], (RankedSynset{SynsetId(1), 0.1}));

  const auto all = worst_synsets(r, MetricKind::isp, 3);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[2].synset, SynsetId(3));
  EXPECT_EQ(worst_synsets(r, MetricKind::isp, 50).size(), 3u);

  // Excluded synsets do not rank on SCS.
  const auto scs = worst_synsets(r, MetricKind::scs, 3);
  ASSERT_EQ(scs.size(), 2u);
  EXPECT_EQ(scs[0].synset, SynsetId(2));

  EXPECT_THROW(worst_synsets(r, MetricKind::isp, 0), ValidationError);
}

TEST(Worst, TiesBreakBySynset) {
  const auto r = report_of({metric(9, 0.5), metric(4, 0.5), metric(7, 0.5)});
  const auto w = worst_synsets(r, MetricKind::isp, 3);
  EXPECT_EQ(w[0].synset, SynsetId(4));
  EXPECT_EQ(w[1].synset, SynsetId(7));
  EXPECT_EQ(w[2].synset, SynsetId(9));
}

TEST(Worst, BestIsTheReverse) {
  const auto r = report_of({metric(1, 0.1), metric(2, 0.5), metric(3, 0.9), metric(4, 0.5)});
  auto worst = worst_synsets(r, MetricKind::isp, 4);
  std::reverse(worst.begin(), worst.end());
  EXPECT_EQ(best_synsets(r, MetricKind::isp, 4), worst);
  EXPECT_EQ(best_synsets(r, MetricKind::isp, 1)[0].synset, SynsetId(3));
}

TEST(Worst, AverageAcrossReports) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  std::vector<MetricReport> reports;
  std::map<std::uint32_t, double> sums;
  for (int r = 0; r < 3; ++r) {
    std::vector<SynsetMetrics> ms;
    for (std::uint32_t s = 1; s <= 20; ++s) {
      const double v = u(rng);
      sums[s] += v;
      ms.push_back(metric(s, v));
    }
    reports.push_back(report_of(std::move(ms)));
  }
  std::vector<std::pair<double, std::uint32_t>> brute;
  for (const auto& [s, total] : sums) brute.emplace_back(total / 3, s);
  std::sort(brute.begin(), brute.end());

  const auto w = worst_synsets(reports, MetricKind::isp, 5);
  ASSERT_EQ(w.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(w[i].synset, SynsetId(brute[i].second));
    EXPECT_NEAR(w[i].value, brute[i].first, 1e-15);
  }
  EXPECT_THROW(worst_synsets(std::span<const MetricReport>{}, MetricKind::isp, 1), ValidationError);
}

TEST(Worst, AverageSkipsSynsetsMissingFromAReport) {
  std::vector<MetricReport> reports{report_of({metric(1, 0.2), metric(2, 0.1)}), report_of({metric(1, 0.4)})};
  const auto w = worst_synsets(reports, MetricKind::isp, 10);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NEAR(w[0].value, 0.3, 1e-15);
}

TEST(ModelDiff, IdenticalReportsGiveZeros) {
  const auto r = report_of({metric(1, 0.1, 0.3), metric(2, 0.5, 0.2), metric(3, 0.9)});
  const auto d = model_diff(r, r, MetricKind::isp);
  ASSERT_EQ(d.ranked.size(), 3u);
  for (const auto& x : d.ranked) EXPECT_EQ(x.value, 0.0);
  EXPECT_EQ(d.summary.mean, 0.0);
  EXPECT_EQ(d.summary.min, 0.0);
  EXPECT_EQ(d.summary.max, 0.0);
  EXPECT_EQ(model_diff(r, r, MetricKind::scs).ranked.size(), 2u);
}

TEST(ModelDiff, LargestDifferenceFirst) {
  const auto a = report_of({metric(1, 0.9), metric(2, 0.5), metric(3, 0.4)});
  const auto b = report_of({metric(1, 0.4), metric(2, 0.5), metric(3, 0.6)});
  const auto d = model_diff(a, b, MetricKind::isp);
  EXPECT_EQ(d.ranked[0].synset, SynsetId(1));
  EXPECT_NEAR(d.ranked[0].value, 0.5, 1e-15);
  EXPECT_EQ(d.ranked[2].synset, SynsetId(3));
  EXPECT_NEAR(d.summary.min, -0.2, 1e-15);

  const auto c = report_of({metric(1, 0.9), metric(4, 0.5), metric(3, 0.4)});
  EXPECT_THROW(model_diff(a, c, MetricKind::isp), ValidationError);
}

TEST(ModelDiff, RecoversPlantedDeltas) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::vector<SynsetMetrics> ma, mb;
  std::vector<std::pair<double, std::uint32_t>> planted;
  for (std::uint32_t s = 1; s <= 100; ++s) {
    const double base = u(rng);
    const double delta = (static_cast<double>(s * 37 % 100) - 50.0) / 200.0;
    ma.push_back(metric(s, base + 0.3 + delta));
    mb.push_back(metric(s, base + 0.3));
    planted.emplace_back(-delta, s);
  }
  std::sort(planted.begin(), planted.end());
  const auto d = model_diff(report_of(ma), report_of(mb), MetricKind::isp);
  ASSERT_EQ(d.ranked.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(d.ranked[i].synset, SynsetId(planted[i].second)) << i;
    EXPECT_NEAR(d.ranked[i].value, -planted[i].first, 1e-12);
  }
  EXPECT_NEAR(d.summary.median, -0.0025, 1e-12);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  EXPECT_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_EQ(quantile_sorted(v, 1.0), 5.0);
  EXPECT_EQ(quantile_sorted(v, 0.5), 3.0);
  EXPECT_NEAR(quantile_sorted(v, 0.05), 1.2, 1e-15);
  EXPECT_NEAR(quantile_sorted(v, 0.3), 2.2, 1e-15);
  const std::vector<double> one{7};
  EXPECT_EQ(quantile_sorted(one, 0.95), 7.0);
}

MetricReport toy_report() {
  // Hand-set values on the toy hierarchy's six evaluation synsets.
  std::vector<SynsetMetrics> ms;
  const std::pair<const char*, std::pair<double, std::optional<double>>> values[] = {
      {"n00001740", {1.0, 1.2}}, {"n00015388", {0.8, 0.6}}, {"n02084071", {0.6, 0.3}},
      {"n01317541", {0.4, 0.5}}, {"n03791235", {0.7, 0.1}}, {"n02958343", {0.2, std::nullopt}},
  };
  for (const auto& [s, v] : values) {
    SynsetMetrics m;
    m.synset = id(s);
    m.isp = v.first;
    m.scs = v.second;
    ms.push_back(m);
  }
  return aggregate(std::move(ms), 2.0);
}

TEST(SubtreeReport, RootMatchesGlobalAggregate) {
  const auto g = testing::toy_graph();
  const auto r = toy_report();
  const std::vector<SynsetId> roots{g.root()};
  const auto agg = subtree_report(r, g, roots);
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_EQ(agg[0].n_synsets, 6u);
  EXPECT_EQ(agg[0].n_scs, 5u);
  EXPECT_DOUBLE_EQ(agg[0].aggregate_isp, r.aggregate_isp);
  EXPECT_DOUBLE_EQ(agg[0].aggregate_scs, r.aggregate_scs);
}

TEST(SubtreeReport, HandAverages) {
  const auto g = testing::toy_graph();
  const auto r = toy_report();
  const std::vector<SynsetId> roots{id("n00015388"), id("n03791235"), id("n02958343")};
  const auto agg = subtree_report(r, g, roots);
  ASSERT_EQ(agg.size(), 3u);
  // animal, dog, domestic animal
  EXPECT_EQ(agg[0].n_synsets, 3u);
  EXPECT_NEAR(agg[0].mean_isp, (0.8 + 0.6 + 0.4) / 3, 1e-15);
  EXPECT_NEAR(agg[0].aggregate_scs, (0.6 + 0.3 + 0.5) / 3 / 2.0, 1e-15);
  // motor vehicle, car; car has no SCS
  EXPECT_EQ(agg[1].n_synsets, 2u);
  EXPECT_EQ(agg[1].n_scs, 1u);
  EXPECT_NEAR(agg[1].mean_isp, 0.45, 1e-15);
  EXPECT_NEAR(agg[1].mean_scs, 0.1, 1e-15);
  // A root with no evaluation descendants is its own average.
  EXPECT_EQ(agg[2].n_synsets, 1u);
  EXPECT_EQ(agg[2].mean_isp, 0.2);
  EXPECT_EQ(agg[2].n_scs, 0u);
  EXPECT_EQ(agg[2].mean_scs, 0.0);
}

TEST(SubtreeReport, Errors) {
  const auto g = testing::toy_graph();
  const auto r = toy_report();
  const std::vector<SynsetId> leaf{id("n02085620")}, unknown{id("n09999999")};
  EXPECT_THROW(subtree_report(r, g, leaf), ValidationError);
  EXPECT_THROW(subtree_report(r, g, unknown), ValidationError);
  const auto partial = report_of({metric(id("n00001740").offset(), 1.0, 0.5)});
  const std::vector<SynsetId> root{g.root()};
  EXPECT_THROW(subtree_report(partial, g, root), ValidationError);
}

TEST(SubtreeReport, DescendantsOnRandomGraphs) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto h = testing::random_hierarchy(rng);
    const auto& g = h.graph;
    const auto eval = g.evaluation_set();
    // The root reaches every evaluation synset.
    EXPECT_EQ(evaluation_descendants(g, g.root()), std::vector<SynsetId>(eval.begin(), eval.end()));
    for (const auto s : eval) {
      // Descendant subtrees nest inside the root's subtree.
      const auto& outer = g.subtree(s).leaf_indices;
      for (const auto d : evaluation_descendants(g, s)) {
        for (const auto leaf : g.subtree(d).leaf_indices) {
          EXPECT_TRUE(std::binary_search(outer.begin(), outer.end(), leaf));
        }
      }
    }
  }
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> n;
  std::vector<double> v(d);
  double norm = 0;
  for (auto& x : v) {
    x = n(rng);
    norm += x * x;
  }
  for (auto& x : v) x /= std::sqrt(norm);
  return v;
}

TEST(HyponymSimilarity, IdenticalAndOrthogonal) {
  const auto g = testing::toy_graph();
  EmbeddingTable same, orth;
  for (const auto s : g.nodes()) {
    same.add(s, {1.0, 2.0, 0.5});
    orth.add(s, g.is_leaf(s) ? std::vector<double>{0, 1} : std::vector<double>{1, 0});
  }
  const auto a = hyponym_similarity(same, g);
  ASSERT_EQ(a.values.size(), 6u);
  for (const auto& h : a.values) {
    EXPECT_NEAR(h.mean_cosine, 1.0, 1e-12);
    EXPECT_EQ(h.leaves_used, g.subtree(h.synset).size());
  }
  for (const auto& h : hyponym_similarity(orth, g).values) EXPECT_NEAR(h.mean_cosine, 0.0, 1e-15);
}

TEST(HyponymSimilarity, RandomVectorsAverageNearZero) {
  // Ten random leaves under one parent in 64 dimensions.
  std::string edges, leaves;
  for (int i = 0; i < 10; ++i) {
    edges += "n0000010" + std::to_string(i) + " n00000001\n";
    leaves += std::to_string(i) + " n0000010" + std::to_string(i) + " leaf" + std::to_string(i) + "\n";
  }
  std::istringstream e(edges), l(leaves);
  HierarchyLoadOptions options;
  options.expected_leaf_count = 10;
  const auto g = parse_hierarchy(e, l, nullptr, options);
  std::mt19937_64 rng(64);
  double total = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    EmbeddingTable table;
    for (const auto s : g.nodes()) table.add(s, random_unit(rng, 64));
    const auto r = hyponym_similarity(table, g);
    ASSERT_EQ(r.values.size(), 1u);
    EXPECT_LT(std::fabs(r.values[0].mean_cosine), 3.0 / std::sqrt(640.0));
    total += r.values[0].mean_cosine;
  }
  EXPECT_LT(std::fabs(total / trials), 3.0 / std::sqrt(640.0 * trials));
}

TEST(HyponymSimilarity, MissingVectors) {
  const auto g = testing::toy_graph();
  EmbeddingTable table;
  for (const auto s : g.nodes()) {
    if (s == id("n02085620") || s == id("n03791235")) continue;
    table.add(s, {1.0, 0.0});
  }
  const auto r = hyponym_similarity(table, g);
  EXPECT_EQ(r.skipped, std::vector<SynsetId>{id("n03791235")});
  for (const auto& h : r.values) {
    if (h.synset == id("n02084071")) {
      EXPECT_EQ(h.leaves_used, 1u);
      EXPECT_EQ(h.leaves_missing, 1u);
    }
  }
}

TEST(SimilarityCorrelation, PerfectAndReversed) {
  std::vector<HyponymSimilarity> sims;
  std::vector<SynsetMetrics> up, down;
  for (std::uint32_t s = 1; s <= 10; ++s) {
    sims.push_back({SynsetId(s), 0.1 * s, 3, 0});
    up.push_back(metric(s, 0.05 * s, 0.05 * s));
    down.push_back(metric(s, 1.0 - 0.05 * s, 1.0 - 0.05 * s));
  }
  EXPECT_NEAR(similarity_metric_correlation(sims, report_of(up), MetricKind::isp).rho, 1.0, 1e-12);
  EXPECT_NEAR(similarity_metric_correlation(sims, report_of(down), MetricKind::scs).rho, -1.0, 1e-12);
  const std::vector<HyponymSimilarity> few(sims.begin(), sims.begin() + 2);
  EXPECT_THROW(similarity_metric_correlation(few, report_of(up), MetricKind::isp), ValidationError);
}

TEST(SimilarityCorrelation, LinkedThroughTheSimulator) {
  const auto g = testing::synthetic_hierarchy(200, 5);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const std::size_t d = 32;

  // Each concept mixes its leaves' centroid with noise; its weight t drives
  // both the mean cosine and the simulated in-subtree mass.
  EmbeddingTable table;
  std::map<SynsetId, std::vector<double>> vectors;
  for (const auto s : g.leaves()) vectors[s] = random_unit(rng, d);
  CompetenceProfile profile;
  profile.kind = ProfileKind::mixture;
  profile.seed = 4;
  for (const auto s : g.evaluation_set()) {
    const double t = u(rng);
    std::vector<double> centroid(d, 0.0);
    for (const auto leaf : g.subtree(s).leaf_indices) {
      const auto& v = vectors[g.leaves()[leaf]];
      for (std::size_t i = 0; i < d; ++i) centroid[i] += v[i];
    }
    double norm = 0;
    for (const double x : centroid) norm += x * x;
    const auto noise = random_unit(rng, d);
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = t * centroid[i] / std::sqrt(norm) + (1 - t) * noise[i];
    vectors[s] = v;
    profile.synset_in_subtree_mass[s] = t;
  }
  for (const auto& [s, v] : vectors) table.add(s, v);

  const auto sims = hyponym_similarity(table, g);
  const auto report = evaluate(g, simulate(g, profile, 16, {2, "linked"}));
  const auto c = similarity_metric_correlation(sims.values, report, MetricKind::isp);
  EXPECT_GT(c.rho, 0.3);
  EXPECT_LT(c.p_value, 0.05);
}

}  // namespace
}  // namespace hypereval
