#include <gtest/gtest.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hypereval/cli.hpp"
#include "test_support.hpp"

namespace hypereval {
namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> with_graph(std::vector<std::string> args) {
  const auto graph = testing::toy_graph_args();
  args.insert(args.end(), graph.begin(), graph.end());
  return args;
}

TEST(Cli, HierarchyStatistics) {
  const auto r = run(with_graph({"hierarchy"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["nodes"], 11);
  EXPECT_EQ(j["leaves"], 5);
  EXPECT_EQ(j["evaluation_synsets"], 6);
  EXPECT_EQ(j["scs_eligible"], 5);
  EXPECT_EQ(j["root"], "n00001740");

  const auto near = run(with_graph({"hierarchy", "--max-leaf-distance", "1"}));
  ASSERT_EQ(near.code, 0) << near.err;
  EXPECT_EQ(nlohmann::json::parse(near.out)["synsets"].size(), 4u);
}

TEST(Cli, CyclicHierarchyIsAValidationError) {
  testing::TempDir dir;
  testing::write_file(dir / "edges.txt", "n00000001 n00000002\nn00000002 n00000001\n");
  testing::write_file(dir / "leaves.txt", "0 n00000001 a\n");
  const auto r = run({"hierarchy", "--edges", (dir / "edges.txt").string(), "--leaves",
                      (dir / "leaves.txt").string(), "--expected-leaves", "0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cycle"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run(with_graph({"evaluate"})).code, 1);
  EXPECT_EQ(run(with_graph({"hierarchy", "--max-leaf-distance", "x"})).code, 1);
  EXPECT_EQ(run({"--version"}).code, 0);
}

TEST(Cli, MissingFileIsAnIoError) {
  const auto r = run(with_graph({"evaluate", "-p", "/nonexistent/preds.jsonl"}));
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, SimulateThenEvaluate) {
  const auto sim = run(with_graph({"simulate", "--kind", "perfect", "-n", "8", "--seed", "2"}));
  ASSERT_EQ(sim.code, 0) << sim.err;
  const auto eval = run(with_graph({"evaluate", "-p", "-"}), sim.out);
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto j = nlohmann::json::parse(eval.out);
  EXPECT_NEAR(j["aggregate_isp"].get<double>(), 1.0, 1e-6);
  EXPECT_EQ(j["synsets"].size(), 6u);
  EXPECT_EQ(j["normalizer_mode"], "derived");

  const auto none = run(with_graph({"evaluate", "-p", "-", "--normalizer", "none"}), sim.out);
  ASSERT_EQ(none.code, 0) << none.err;
  const auto k = nlohmann::json::parse(none.out);
  EXPECT_EQ(k["scs_normalizer"], 1.0);
  EXPECT_EQ(k["aggregate_scs"], k["mean_scs"]);
}

TEST(Cli, EvaluateNamesMissingSynset) {
  const auto sim = run(with_graph({"simulate", "--kind", "collapsed", "-n", "2"}));
  ASSERT_EQ(sim.code, 0) << sim.err;
  std::istringstream lines(sim.out);
  std::string kept, line;
  while (std::getline(lines, line)) {
    if (line.find("n02958343") == std::string::npos) kept += line + "\n";
  }
  const auto r = run(with_graph({"evaluate", "-p", "-"}), kept);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("n02958343"), std::string::npos) << r.err;
}

TEST(Cli, JobsDoNotChangeOutput) {
  const auto sim = run(with_graph({"simulate", "--kind", "mixture", "-n", "6", "--seed", "9", "-j", "3"}));
  ASSERT_EQ(sim.code, 0) << sim.err;
  const auto one = run(with_graph({"evaluate", "-p", "-", "-j", "1"}), sim.out);
  const auto many = run(with_graph({"evaluate", "-p", "-", "-j", "8"}), sim.out);
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_EQ(one.out, many.out);
}

TEST(Cli, CompareIdenticalReportsIsZero) {
  testing::TempDir dir;
  const auto sim = run(with_graph({"simulate", "--kind", "mixture", "-n", "4", "-o", (dir / "p.jsonl").string()}));
  ASSERT_EQ(sim.code, 0) << sim.err;
  const auto rep =
      run(with_graph({"evaluate", "-p", (dir / "p.jsonl").string(), "-o", (dir / "r.json").string()}));
  ASSERT_EQ(rep.code, 0) << rep.err;
  const auto cmp = run({"compare", (dir / "r.json").string(), (dir / "r.json").string()});
  ASSERT_EQ(cmp.code, 0) << cmp.err;
  const auto j = nlohmann::json::parse(cmp.out);
  EXPECT_EQ(j["summary"]["count"], 6);
  for (const auto& d : j["differences"]) EXPECT_EQ(d["difference"], 0.0);

  const auto worst = run({"worst", (dir / "r.json").string(), "-k", "2"});
  ASSERT_EQ(worst.code, 0) << worst.err;
  EXPECT_EQ(std::count(worst.out.begin(), worst.out.end(), '\n'), 3);

  const auto sub = run(with_graph({"subtree", (dir / "r.json").string(), "-r", "n00015388"}));
  ASSERT_EQ(sub.code, 0) << sub.err;
  EXPECT_NE(sub.out.find("n00015388"), std::string::npos);
}

TEST(Cli, SweepIspIsMonotone) {
  const auto r = run(with_graph({"sweep", "--kind", "mixture", "--in-subtree-mass", "0.6", "-c", "0.5,2,8", "-n",
                                 "16", "--seed", "4"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_EQ(j["points"].size(), 3u);
  double last = -1;
  for (const auto& p : j["points"]) {
    EXPECT_GT(p["aggregate_isp"].get<double>(), last);
    last = p["aggregate_isp"].get<double>();
  }
}

TEST(Cli, CorpusCountAndAgreement) {
  testing::TempDir dir;
  testing::write_file(dir / "caps.txt", "a dog and a car\nthe Jeep\nan entity of a dog\n");
  const auto r = run(with_graph({"corpus-count", (dir / "caps.txt").string(), "--summary",
                                 (dir / "summary.json").string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("n02084071"), std::string::npos);
  const auto summary = nlohmann::json::parse(testing::read_file(dir / "summary.json"));
  EXPECT_EQ(summary["n_captions"], 3);

  testing::write_file(dir / "ratings.csv", "item,rater,category\n1,a,x\n1,b,x\n2,a,y\n2,b,y\n");
  const auto a = run({"agreement", (dir / "ratings.csv").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NEAR(nlohmann::json::parse(a.out)["alpha"].get<double>(), 1.0, 1e-12);
}

}  // namespace
}  // namespace hypereval
