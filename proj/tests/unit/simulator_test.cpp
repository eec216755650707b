#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hypereval/error.hpp"
#include "hypereval/simulator.hpp"
#include "hypereval/stats.hpp"
#include "test_support.hpp"

namespace hypereval {
namespace {

CompetenceProfile profile_of(ProfileKind kind, std::int64_t seed = 1) {
  CompetenceProfile p;
  p.kind = kind;
  p.seed = seed;
  return p;
}

const HierarchyGraph& synthetic() {
  static const HierarchyGraph g = testing::synthetic_hierarchy(1000, 3);
  return g;
}

TEST(CounterRng, IsAPureFunctionOfItsKey) {
  CounterRng a(1, 2, 3), b(1, 2, 3), c(1, 2, 4), d(2, 2, 3);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
    EXPECT_NE(x, d.next());
  }
}

TEST(CounterRng, Distributions) {
  CounterRng rng(7, 0, 0);
  std::vector<int> hist(6, 0);
  double sum = 0, sq = 0, usum = 0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    usum += u;
    ++hist[rng.below(6)];
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(usum / n, 0.5, 0.005);
  for (const int h : hist) EXPECT_NEAR(h / double(n), 1.0 / 6, 0.005);
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Profile, ParseAndPrint) {
  auto cfg = KeyValueConfig::parse(
      "kind = concentrated\nin_subtree_mass = 0.6\nconcentration = 2.5\ncoverage = 3\n"
      "noise_scale = 0.5\ndifficulty = 1\nseed = -7\nin_subtree_mass.n02084071 = 0.1\n");
  const auto p = parse_profile(cfg);
  EXPECT_EQ(p.kind, ProfileKind::concentrated);
  EXPECT_DOUBLE_EQ(p.in_subtree_mass, 0.6);
  EXPECT_EQ(p.coverage, 3u);
  EXPECT_EQ(p.seed, -7);
  EXPECT_DOUBLE_EQ(p.synset_in_subtree_mass.at(SynsetId::parse("n02084071")), 0.1);

  const auto again = parse_profile(KeyValueConfig::parse(profile_to_config(p)));
  EXPECT_EQ(again.kind, p.kind);
  EXPECT_EQ(again.coverage, p.coverage);
  EXPECT_DOUBLE_EQ(again.noise_scale, p.noise_scale);
  EXPECT_EQ(again.synset_in_subtree_mass, p.synset_in_subtree_mass);

  EXPECT_FALSE(parse_profile(KeyValueConfig::parse("coverage = all\n")).coverage.has_value());
  EXPECT_EQ(parse_profile_kind("ignorant"), ProfileKind::ignorant);
  EXPECT_EQ(to_string(ProfileKind::mixture), "mixture");
}

TEST(Profile, Validation) {
  for (const char* bad : {"kind = genius\n", "in_subtree_mass = 1.5\n", "concentration = 0\n", "coverage = 0\n",
                          "noise_scale = -1\n", "difficulty = -0.1\n", "temperature = 3\n",
                          "in_subtree_mass.n02084071 = 2\n"}) {
    EXPECT_THROW(parse_profile(KeyValueConfig::parse(bad)), ValidationError) << bad;
  }
  EXPECT_THROW(simulate(testing::toy_graph(), profile_of(ProfileKind::perfect), 0), ValidationError);
}

TEST(Simulate, PerfectKeepsAllMassInside) {
  const auto g = testing::toy_graph();
  const auto preds = simulate(g, profile_of(ProfileKind::perfect), 8);
  EXPECT_EQ(preds.kind, OutputKind::probabilities);
  EXPECT_EQ(preds.synsets.size(), g.evaluation_set().size());
  EXPECT_EQ(preds.uniform_rows(), 8u);
  const auto report = evaluate(g, preds);
  for (const auto& m : report.synsets) EXPECT_NEAR(m.isp, 1.0, 1e-6) << m.synset;
  EXPECT_NEAR(report.aggregate_isp, 1.0, 1e-6);
}

TEST(Simulate, PerfectCyclesThroughTheSubtree) {
  const auto g = testing::toy_graph();
  const auto preds = simulate(g, profile_of(ProfileKind::perfect), 5);
  const auto& root = *preds.find(g.root());
  std::set<std::size_t> hit;
  for (std::size_t r = 0; r < root.rows(); ++r) {
    const auto row = root.row(r, 5);
    for (std::size_t c = 0; c < 5; ++c) {
      if (row[c] == 1.0F) hit.insert(c);
    }
  }
  EXPECT_EQ(hit.size(), 5u);
  // With every leaf seen once, SCS hits its ceiling ln 5.
  const auto m = evaluate(g, preds).find(g.root());
  EXPECT_NEAR(*m->scs, std::log(5.0), 1e-12);
}

TEST(Simulate, CollapsedHasZeroCoverage) {
  const auto g = testing::toy_graph();
  const auto report = evaluate(g, simulate(g, profile_of(ProfileKind::collapsed), 16));
  for (const auto& m : report.synsets) {
    if (m.scs) EXPECT_EQ(*m.scs, 0.0) << m.synset;
    EXPECT_EQ(m.isp, 1.0);
  }
  EXPECT_EQ(report.aggregate_scs, 0.0);
}

TEST(Simulate, IgnorantMatchesSubtreeShare) {
  const auto& g = synthetic();
  const std::size_t n = 400;
  const auto report = evaluate(g, simulate(g, profile_of(ProfileKind::ignorant, 5), n, {4, "x"}));
  // Mean over synsets of ISP - |A|/1000 is a sum of many independent
  // binomial deviations; allow 4 standard errors.
  double dev = 0, var = 0;
  for (const auto& m : report.synsets) {
    const double p = m.subtree_size / 1000.0;
    dev += m.isp - p;
    var += p * (1 - p) / n;
  }
  EXPECT_LT(std::fabs(dev), 4 * std::sqrt(var));
}

TEST(Simulate, SoftRowsAreNormalized) {
  const auto g = testing::toy_graph();
  for (const auto kind : {ProfileKind::mixture, ProfileKind::concentrated}) {
    auto profile = profile_of(kind);
    profile.in_subtree_mass = 0.7;
    const auto preds = simulate(g, profile, 6);
    for (const auto& [s, p] : preds.synsets) {
      for (std::size_t r = 0; r < p.rows(); ++r) {
        double total = 0;
        for (const float v : p.row(r, 5)) {
          EXPECT_GE(v, 0.0F);
          total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-6);
      }
    }
    // The root covers every class, so all mass is inside.
    EXPECT_NEAR(evaluate(g, preds).find(g.root())->isp, 1.0, 1e-6);
    // Elsewhere the inside mass is in_subtree_mass at concentration 1.
    EXPECT_NEAR(evaluate(g, preds).find(SynsetId::parse("n02084071"))->isp, 0.7, 1e-6);
  }
}

TEST(Simulate, CoverageLimitsKnownLeaves) {
  const auto g = testing::toy_graph();
  auto profile = profile_of(ProfileKind::mixture);
  profile.coverage = 1;
  profile.in_subtree_mass = 1.0;
  SimulationStats stats;
  const auto preds = simulate(g, profile, 4, {}, &stats);
  EXPECT_EQ(stats.clamped_coverage, 0u);
  const auto report = evaluate(g, preds);
  for (const auto& m : report.synsets) {
    if (m.scs) EXPECT_NEAR(*m.scs, 0.0, 1e-12);
  }
  profile.coverage = 3;
  simulate(g, profile, 4, {}, &stats);
  EXPECT_EQ(stats.clamped_coverage, 4u);  // dog, domestic animal, motor vehicle, car
}

TEST(Simulate, DeterministicAndThreadIndependent) {
  const auto& g = synthetic();
  auto profile = profile_of(ProfileKind::mixture, 99);
  profile.difficulty = 1.0;
  const auto a = simulate(g, profile, 8, {1, "m"});
  const auto b = simulate(g, profile, 8, {7, "m"});
  EXPECT_EQ(a, b);
  profile.seed = 100;
  EXPECT_NE(simulate(g, profile, 8, {1, "m"}).synsets, a.synsets);
}

TEST(Simulate, SeedsAgreeOnHardConcepts) {
  const auto& g = synthetic();
  std::vector<MetricReport> reports;
  for (int seed = 1; seed <= 4; ++seed) {
    auto profile = profile_of(ProfileKind::mixture, seed);
    profile.in_subtree_mass = 0.7;
    profile.difficulty = 1.5;
    reports.push_back(evaluate(g, simulate(g, profile, 32, {4, "s" + std::to_string(seed)})));
  }
  EXPECT_GT(pairwise_seed_correlation(reports, MetricKind::isp).mean_rho, 0.9);
  EXPECT_GT(pairwise_seed_correlation(reports, MetricKind::scs).mean_rho, 0.9);
}

TEST(Sweep, IspRisesWithConcentration) {
  const auto g = testing::toy_graph();
  auto base = profile_of(ProfileKind::mixture, 3);
  base.in_subtree_mass = 0.6;
  const std::vector<double> c{0.5, 2, 8};
  const auto reports = guidance_sweep(g, base, c, 32);
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_LT(reports[0].aggregate_isp, reports[1].aggregate_isp);
  EXPECT_LT(reports[1].aggregate_isp, reports[2].aggregate_isp);
  EXPECT_EQ(reports[2].model_id, "sweep-c8");
}

TEST(Sweep, SingleValueEqualsSimulateThenEvaluate) {
  const auto g = testing::toy_graph();
  auto base = profile_of(ProfileKind::concentrated, 5);
  const std::vector<double> c{3};
  const auto reports = guidance_sweep(g, base, c, 16);
  ASSERT_EQ(reports.size(), 1u);
  base.concentration = 3;
  auto direct = evaluate(g, simulate(g, base, 16, {1, "sweep-c3"}));
  EXPECT_EQ(reports[0], direct);
  EXPECT_THROW(guidance_sweep(g, base, std::span<const double>{}, 16), ValidationError);
}

TEST(Sweep, CoverageCurveIsUnimodalOrDecreasing) {
  const auto& g = synthetic();
  auto base = profile_of(ProfileKind::mixture, 11);
  const std::vector<double> c{0.1, 0.25, 0.5, 1, 2, 4, 8, 16, 50};
  EvaluateOptions options;
  options.jobs = 4;
  const auto reports = guidance_sweep(g, base, c, 32, options);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    EXPECT_LE(reports[i - 1].aggregate_isp, reports[i].aggregate_isp);
    if (reports[i].aggregate_scs > reports[peak].aggregate_scs) peak = i;
  }
  for (std::size_t i = peak + 1; i < reports.size(); ++i) {
    EXPECT_LE(reports[i].aggregate_scs, reports[i - 1].aggregate_scs);
  }
}

}  // namespace
}  // namespace hypereval
