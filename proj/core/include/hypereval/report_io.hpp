#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hypereval/metrics.hpp"

namespace hypereval {

/// Aggregates at the top level plus a `synsets` array. Key order and number
/// formatting are fixed, so equal reports serialize to identical bytes.
std::string report_to_json(const MetricReport& report);
MetricReport report_from_json(const std::string& text);

/// `synset,isp,scs,subtree_size,n_samples`; empty scs for excluded synsets.
void write_report_csv(const MetricReport& report, std::ostream& out);

MetricReport load_report(const std::filesystem::path& path);
void save_report(const MetricReport& report, const std::filesystem::path& path);

}  // namespace hypereval
