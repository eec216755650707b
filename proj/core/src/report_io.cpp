#include "hypereval/report_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "hypereval/error.hpp"

namespace hypereval {

std::string report_to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["model_id"] = report.model_id;
  j["seed"] = report.seed;
  j["n_samples"] = report.n_samples ? nlohmann::ordered_json(*report.n_samples) : nlohmann::ordered_json();
  j["aggregate_isp"] = report.aggregate_isp;
  j["aggregate_scs"] = report.aggregate_scs;
  j["mean_isp"] = report.mean_isp;
  j["mean_scs"] = report.mean_scs;
  j["isp_normalizer"] = report.isp_normalizer;
  j["scs_normalizer"] = report.scs_normalizer;
  j["normalizer_mode"] = report.normalizer_mode;
  j["counts"] = {{"synsets", report.isp_count},
                 {"scs_included", report.scs_included},
                 {"scs_excluded", report.scs_excluded},
                 {"degenerate_rows", report.degenerate_rows}};
  auto& rows = j["synsets"] = nlohmann::ordered_json::array();
  for (const auto& m : report.synsets) {
    nlohmann::ordered_json row;
    row["synset"] = m.synset.str();
    row["isp"] = m.isp;
    row["scs"] = m.scs ? nlohmann::ordered_json(*m.scs) : nlohmann::ordered_json();
    row["subtree_size"] = m.subtree_size;
    row["n_samples"] = m.n_samples;
    if (m.degenerate_rows) row["degenerate_rows"] = m.degenerate_rows;
    rows.push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

MetricReport report_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricReport r;
    r.model_id = j.at("model_id").get<std::string>();
    r.seed = j.value("seed", std::int64_t{0});
    if (j.contains("n_samples") && !j["n_samples"].is_null()) r.n_samples = j["n_samples"].get<std::size_t>();
    r.aggregate_isp = j.at("aggregate_isp").get<double>();
    r.aggregate_scs = j.at("aggregate_scs").get<double>();
    r.mean_isp = j.at("mean_isp").get<double>();
    r.mean_scs = j.at("mean_scs").get<double>();
    r.isp_normalizer = j.at("isp_normalizer").get<double>();
    r.scs_normalizer = j.at("scs_normalizer").get<double>();
    r.normalizer_mode = j.at("normalizer_mode").get<std::string>();
    const auto& c = j.at("counts");
    r.isp_count = c.at("synsets").get<std::size_t>();
    r.scs_included = c.at("scs_included").get<std::size_t>();
    r.scs_excluded = c.at("scs_excluded").get<std::size_t>();
    r.degenerate_rows = c.value("degenerate_rows", std::size_t{0});
    for (const auto& row : j.at("synsets")) {
      SynsetMetrics m;
      m.synset = SynsetId::parse(row.at("synset").get<std::string>());
      m.isp = row.at("isp").get<double>();
      if (!row.at("scs").is_null()) m.scs = row["scs"].get<double>();
      m.subtree_size = row.at("subtree_size").get<std::size_t>();
      m.n_samples = row.at("n_samples").get<std::size_t>();
      m.degenerate_rows = row.value("degenerate_rows", std::size_t{0});
      r.synsets.push_back(m);
    }
    if (!std::is_sorted(r.synsets.begin(), r.synsets.end(),
                        [](const auto& a, const auto& b) { return a.synset < b.synset; })) {
      throw ValidationError("report synsets are not sorted");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed metric report: ") + e.what());
  }
}

void write_report_csv(const MetricReport& report, std::ostream& out) {
  out << "synset,isp,scs,subtree_size,n_samples\n";
  std::ostringstream row;
  row.precision(17);
  for (const auto& m : report.synsets) {
    row.str({});
    row << m.synset << ',' << m.isp << ',';
    if (m.scs) row << *m.scs;
    row << ',' << m.subtree_size << ',' << m.n_samples << '\n';
    out << row.str();
  }
}

MetricReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return report_from_json(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_report(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report " + path.string());
  out << report_to_json(report);
}

}  // namespace hypereval
