#include "hypereval/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "hypereval/error.hpp"
#include "hypereval/numeric.hpp"
#include "hypereval/predictions.hpp"

namespace hypereval {

LabeledPredictionSet::LabeledPredictionSet(std::size_t n_classes, std::vector<double> probabilities,
                                           std::vector<std::uint32_t> labels)
    : n_classes_(n_classes), probabilities_(std::move(probabilities)), labels_(std::move(labels)) {
  if (n_classes_ == 0) throw ValidationError("labeled predictions need at least one class");
  if (probabilities_.size() != labels_.size() * n_classes_) {
    throw ValidationError("labeled predictions: " + std::to_string(probabilities_.size()) +
                          " values do not form " + std::to_string(labels_.size()) + " rows of " +
                          std::to_string(n_classes_));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= n_classes_) {
      throw ValidationError("row " + std::to_string(i) + ": label " + std::to_string(labels_[i]) +
                            " out of range");
    }
    CompensatedSum sum;
    for (const double p : row(i)) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw ValidationError("row " + std::to_string(i) + ": invalid probability");
      }
      sum.add(p);
    }
    if (std::fabs(sum.value() - 1.0) > kProbabilitySumTolerance) {
      throw ValidationError("row " + std::to_string(i) + ": probabilities sum to " + std::to_string(sum.value()));
    }
  }
}

LabeledPredictionSet load_labeled_predictions(std::istream& in) {
  std::vector<double> values;
  std::vector<std::uint32_t> labels;
  std::optional<std::size_t> n_classes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      const auto kind = parse_output_kind(j.value("kind", std::string("probabilities")));
      const auto row = j.at("values").get<std::vector<double>>();
      const auto label = j.at("label").get<std::int64_t>();
      if (label < 0) throw ValidationError("negative label");
      if (!n_classes) n_classes = row.size();
      if (row.size() != *n_classes) {
        throw ValidationError("row has " + std::to_string(row.size()) + " values, expected " +
                              std::to_string(*n_classes));
      }
      for (const double v : row) {
        if (!std::isfinite(v)) throw ValidationError("non-finite value");
      }
      const auto probs = full_distribution(std::span<const double>(row), kind);
      values.insert(values.end(), probs.begin(), probs.end());
      labels.push_back(static_cast<std::uint32_t>(label));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  if (labels.empty()) throw ValidationError("labeled prediction file is empty");
  return LabeledPredictionSet(*n_classes, std::move(values), std::move(labels));
}

LabeledPredictionSet load_labeled_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labeled predictions " + path.string());
  return load_labeled_predictions(in);
}

std::size_t argmax(std::span<const double> row) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

std::vector<CalibrationBin> calibration_curve(const LabeledPredictionSet& data, std::size_t n_bins) {
  if (n_bins == 0) throw ValidationError("calibration needs at least one bin");
  if (data.size() == 0) throw ValidationError("calibration of an empty dataset");
  std::vector<CalibrationBin> bins(n_bins);
  std::vector<CompensatedSum> conf(n_bins);
  std::vector<std::size_t> correct(n_bins, 0);
  const auto b = static_cast<double>(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    bins[i].lower = static_cast<double>(i) / b;
    bins[i].upper = static_cast<double>(i + 1) / b;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    const std::size_t pred = argmax(row);
    const double c = std::clamp(row[pred], 0.0, 1.0);
    // Right-inclusive: c in (k/B, (k+1)/B] -> k.
    auto k = static_cast<std::size_t>(std::max(0.0, std::ceil(c * b) - 1.0));
    k = std::min(k, n_bins - 1);
    ++bins[k].count;
    conf[k].add(c);
    if (pred == data.label(i)) ++correct[k];
  }
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (bins[k].count == 0) continue;
    const auto n = static_cast<double>(bins[k].count);
    bins[k].confidence = conf[k].value() / n;
    bins[k].accuracy = static_cast<double>(correct[k]) / n;
  }
  return bins;
}

double expected_calibration_error(const LabeledPredictionSet& data, std::size_t n_bins) {
  const auto bins = calibration_curve(data, n_bins);
  CompensatedSum ece;
  const auto n = static_cast<double>(data.size());
  for (const auto& bin : bins) {
    if (bin.count == 0) continue;
    ece.add(static_cast<double>(bin.count) / n * std::fabs(bin.accuracy - bin.confidence));
  }
  return ece.value();
}

double top1_accuracy(const LabeledPredictionSet& data) {
  if (data.size() == 0) throw ValidationError("accuracy of an empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax(data.row(i)) == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void write_calibration_csv(std::span<const CalibrationBin> bins, std::ostream& out) {
  out << "bin,lower,upper,count,confidence,accuracy\n";
  std::ostringstream row;
  row.precision(17);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    row.str({});
    const auto& b = bins[i];
    row << i << ',' << b.lower << ',' << b.upper << ',' << b.count << ',';
    if (b.count) row << b.confidence << ',' << b.accuracy;
    else row << ',';
    row << '\n';
    out << row.str();
  }
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ValidationError("pearson needs equal, non-empty inputs");
  const auto n = static_cast<double>(x.size());
  const double mx = compensated_sum(x) / n;
  const double my = compensated_sum(y) / n;
  CompensatedSum sxy;
  CompensatedSum sxx;
  CompensatedSum syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() == 0.0 || syy.value() == 0.0) throw ValidationError("correlation of a constant input");
  return std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
}

double student_t_two_sided(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t_distribution<double> dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

namespace {

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

// Null distribution of S = sum of squared rank differences for tie-free
// data; it depends on n only, so it is built once per n.
const std::vector<std::uint64_t>& tie_free_null(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::vector<std::uint64_t>> cache;
  std::lock_guard lock(mutex);
  auto& counts = cache[n];
  if (counts.empty()) {
    counts.assign(n * (n * n - 1) / 3 + 1, 0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do {
      std::size_t s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t d = perm[i] > i ? perm[i] - i : i - perm[i];
        s += d * d;
      }
      ++counts[s];
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return counts;
}

bool tie_free(std::vector<double> ranks) {
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != static_cast<double>(i + 1)) return false;
  }
  return true;
}

double exact_spearman_p(const std::vector<double>& rx, std::vector<double> ry, double rho) {
  const std::size_t n = rx.size();
  if (tie_free(rx) && tie_free(ry)) {
    std::size_t observed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto d = static_cast<long long>(rx[i]) - static_cast<long long>(ry[i]);
      observed += static_cast<std::size_t>(d * d);
    }
    // rho and -rho correspond to S and n(n^2-1)/3 - S.
    const std::size_t mirror = n * (n * n - 1) / 3 - observed;
    const std::size_t lo = std::min(observed, mirror);
    const std::size_t hi = std::max(observed, mirror);
    const auto& counts = tie_free_null(n);
    std::uint64_t extreme = 0;
    std::uint64_t total = 0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      total += counts[s];
      if (s <= lo || s >= hi) extreme += counts[s];
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
  }

  // With ties, every arrangement of the multiset of y-ranks is equally
  // likely under the null.
  std::sort(ry.begin(), ry.end());
  const double threshold = std::fabs(rho) - 1e-12;
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
  do {
    ++total;
    if (std::fabs(pearson(rx, ry)) >= threshold) ++extreme;
  } while (std::next_permutation(ry.begin(), ry.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

Correlation spearman(std::span<const double> x, std::span<const double> y, SpearmanMethod method) {
  if (x.size() != y.size()) throw ValidationError("spearman inputs differ in length");
  if (x.size() < 3) throw ValidationError("spearman needs at least 3 observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValidationError("spearman input is not finite");
  }
  if (is_constant(x) || is_constant(y)) throw ValidationError("spearman correlation undefined for a constant input");

  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  Correlation out;
  out.n = x.size();
  out.rho = pearson(rx, ry);

  const bool exact = method == SpearmanMethod::exact ||
                     (method == SpearmanMethod::automatic && out.n <= kExactSpearmanMaxN);
  if (exact) {
    if (out.n > kExactSpearmanMaxN) {
      throw ValidationError("exact spearman p-value limited to n <= " + std::to_string(kExactSpearmanMaxN));
    }
    out.p_value = exact_spearman_p(rx, ry, out.rho);
    return out;
  }
  if (std::fabs(out.rho) >= 1.0) {
    out.p_value = 0.0;
    return out;
  }
  const auto dof = static_cast<double>(out.n - 2);
  const double t = out.rho * std::sqrt(dof / ((1.0 + out.rho) * (1.0 - out.rho)));
  out.p_value = student_t_two_sided(t, dof);
  return out;
}

RatingMatrix::RatingMatrix(std::size_t items, std::size_t raters)
    : items_(items), raters_(raters), cells_(items * raters) {}

void RatingMatrix::set(std::size_t item, std::size_t rater, int category) {
  if (item >= items_ || rater >= raters_) throw ValidationError("rating cell out of range");
  cells_[item * raters_ + rater] = category;
}

std::optional<int> RatingMatrix::get(std::size_t item, std::size_t rater) const {
  return cells_[item * raters_ + rater];
}

RatingMatrix load_ratings_csv(std::istream& in) {
  struct Cell {
    std::size_t item;
    std::size_t rater;
    int category;
  };
  std::map<std::string, std::size_t> items;
  std::map<std::string, std::size_t> raters;
  std::map<std::string, int> categories;
  std::vector<Cell> cells;
  std::string line;
  std::size_t line_no = 0;
  const auto intern = [](auto& table, const std::string& key) {
    const auto it = table.find(key);
    if (it != table.end()) return it->second;
    const auto id = static_cast<std::remove_reference_t<decltype(table.begin()->second)>>(table.size());
    table.emplace(key, id);
    return id;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (fields.size() != 3) {
      throw ValidationError("ratings line " + std::to_string(line_no) + ": expected item,rater,category");
    }
    if (line_no == 1 && fields[0] == "item" && fields[1] == "rater") continue;
    if (fields[2].empty()) continue;  // missing rating
    cells.push_back({intern(items, fields[0]), intern(raters, fields[1]), intern(categories, fields[2])});
  }
  RatingMatrix m(items.size(), raters.size());
  for (const auto& c : cells) {
    if (m.get(c.item, c.rater)) {
      throw ValidationError("duplicate rating for one (item, rater) pair");
    }
    m.set(c.item, c.rater, c.category);
  }
  return m;
}

RatingMatrix load_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ratings " + path.string());
  return load_ratings_csv(in);
}

double krippendorff_alpha_nominal(const RatingMatrix& ratings) {
  if (ratings.raters() < 2) throw ValidationError("krippendorff's alpha needs at least two raters");
  std::map<std::pair<int, int>, double> coincidence;
  std::map<int, double> marginal;
  std::vector<int> values;
  bool pairable = false;
  for (std::size_t u = 0; u < ratings.items(); ++u) {
    values.clear();
    for (std::size_t r = 0; r < ratings.raters(); ++r) {
      if (const auto v = ratings.get(u, r)) values.push_back(*v);
    }
    const std::size_t m = values.size();
    if (m < 2) continue;
    pairable = true;
    const double weight = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i == j) continue;
        coincidence[{values[i], values[j]}] += weight;
        marginal[values[i]] += weight;
      }
    }
  }
  if (!pairable) throw ValidationError("krippendorff's alpha: no item has two or more ratings");

  double n = 0.0;
  for (const auto& [_, v] : marginal) n += v;
  double observed = 0.0;
  for (const auto& [cell, v] : coincidence) {
    if (cell.first != cell.second) observed += v;
  }
  if (observed == 0.0) return 1.0;
  double expected = 0.0;
  for (const auto& [c, nc] : marginal) {
    for (const auto& [k, nk] : marginal) {
      if (c != k) expected += nc * nk;
    }
  }
  return 1.0 - (n - 1.0) * observed / expected;
}

MetricKind parse_metric_kind(std::string_view text) {
  if (text == "isp") return MetricKind::isp;
  if (text == "scs") return MetricKind::scs;
  throw UsageError("unknown metric '" + std::string(text) + "' (isp, scs)");
}

std::string_view to_string(MetricKind kind) noexcept { return kind == MetricKind::isp ? "isp" : "scs"; }

SeedStability pairwise_seed_correlation(std::span<const MetricReport> reports, MetricKind metric) {
  if (reports.size() < 2) throw ValidationError("seed stability needs at least two reports");
  for (std::size_t r = 1; r < reports.size(); ++r) {
    const auto& a = reports[0].synsets;
    const auto& b = reports[r].synsets;
    const bool same = a.size() == b.size() &&
                      std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) {
                        return x.synset == y.synset;
                      });
    if (!same) {
      throw ValidationError("reports '" + reports[0].model_id + "' and '" + reports[r].model_id +
                            "' cover different synsets");
    }
  }
  SeedStability out;
  CompensatedSum total;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t j = i + 1; j < reports.size(); ++j) {
      std::vector<double> x;
      std::vector<double> y;
      for (std::size_t k = 0; k < reports[i].synsets.size(); ++k) {
        const auto& a = reports[i].synsets[k];
        const auto& b = reports[j].synsets[k];
        if (metric == MetricKind::isp) {
          x.push_back(a.isp);
          y.push_back(b.isp);
        } else if (a.scs && b.scs) {
          x.push_back(*a.scs);
          y.push_back(*b.scs);
        }
      }
      const auto c = spearman(x, y);
      out.pairs.push_back({i, j, c});
      total.add(c.rho);
    }
  }
  out.mean_rho = total.value() / static_cast<double>(out.pairs.size());
  return out;
}

}  // namespace hypereval
