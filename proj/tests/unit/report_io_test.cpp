#include <gtest/gtest.h>

#include <sstream>

#include "hypereval/error.hpp"
#include "hypereval/report_io.hpp"
#include "test_support.hpp"

namespace hypereval {
namespace {

MetricReport sample_report() {
  std::vector<SynsetMetrics> m{{SynsetId(3), 0.125, 0.3, 8, 4, 0},
                               {SynsetId(1), 1.0 / 3.0, std::nullopt, 8, 1, 0},
                               {SynsetId(2), 0.9, 1e-17, 8, 2, 3}};
  auto r = aggregate(std::move(m), 1.6236960327744614);
  r.model_id = "model \"a\"";
  r.seed = -4;
  r.normalizer_mode = "derived";
  return r;
}

TEST(ReportIo, JsonRoundTripIsExact) {
  const auto report = sample_report();
  const auto text = report_to_json(report);
  const auto back = report_from_json(text);
  EXPECT_EQ(back, report);
  EXPECT_EQ(report_to_json(back), text);
}

TEST(ReportIo, RaggedReportKeepsNullSampleCount) {
  auto report = sample_report();
  report.n_samples.reset();
  EXPECT_EQ(report_from_json(report_to_json(report)).n_samples, std::nullopt);
}

TEST(ReportIo, Csv) {
  std::ostringstream out;
  write_report_csv(sample_report(), out);
  std::istringstream in(out.str());
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header, "synset,isp,scs,subtree_size,n_samples");
  EXPECT_EQ(first.substr(0, 10), "n00000001,");
  EXPECT_NE(first.find(",,1,8"), std::string::npos) << first;
  EXPECT_EQ(second.substr(0, 10), "n00000002,");
}

TEST(ReportIo, FilesAndErrors) {
  testing::TempDir dir;
  const auto report = sample_report();
  save_report(report, dir / "r.json");
  EXPECT_EQ(load_report(dir / "r.json"), report);
  EXPECT_THROW(load_report(dir / "missing.json"), IoError);
  EXPECT_THROW(report_from_json("{\"model_id\": \"x\"}"), ValidationError);
  EXPECT_THROW(report_from_json("not json"), ValidationError);
  EXPECT_THROW(save_report(report, "/nonexistent/dir/r.json"), IoError);
}

}  // namespace
}  // namespace hypereval
