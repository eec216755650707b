#include <iomanip>
#include <sstream>

#include "common.hpp"
#include "hypereval/analysis.hpp"
#include "hypereval/corpus.hpp"
#include "hypereval/embeddings.hpp"
#include "hypereval/error.hpp"
#include "hypereval/report_io.hpp"

namespace hypereval::cli {
namespace {

std::vector<MetricReport> read_reports(const std::vector<std::string>& paths, std::istream& in) {
  std::vector<MetricReport> reports;
  reports.reserve(paths.size());
  for (const auto& p : paths) reports.push_back(read_report(p, in));
  return reports;
}

std::string number(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

Command compare_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand(
      "compare", "Per-synset difference of two reports, or seed stability across three or more");
  struct State {
    std::vector<std::string> reports;
    std::string metric = "isp";
    bool stability = false;
    std::optional<std::size_t> top;
    std::string out;
  };
  auto st = std::make_shared<State>();
  cmd->add_option("reports", st->reports, "Report JSON files")->required()->expected(2, -1);
  cmd->add_option("-m,--metric", st->metric, "isp or scs")->capture_default_str();
  cmd->add_flag("--seed-stability", st->stability, "Pairwise Spearman correlation even for two reports");
  cmd->add_option("--top", st->top, "Keep only the first N ranked differences");
  cmd->add_option("-o,--out", st->out, "Output path (default stdout)");

  return {cmd, [st, &io] {
    const auto metric = parse_metric_kind(st->metric);
    const auto reports = read_reports(st->reports, io.in);
    nlohmann::ordered_json j;
    j["metric"] = std::string(to_string(metric));
    if (reports.size() == 2 && !st->stability) {
      const auto diff = model_diff(reports[0], reports[1], metric);
      j["a"] = reports[0].model_id;
      j["b"] = reports[1].model_id;
      const auto& s = diff.summary;
      j["summary"] = {{"count", diff.ranked.size()}, {"mean", s.mean}, {"min", s.min}, {"q05", s.q05},
                      {"q25", s.q25}, {"median", s.median}, {"q75", s.q75}, {"q95", s.q95}, {"max", s.max}};
      auto& rows = j["differences"] = nlohmann::ordered_json::array();
      const std::size_t n = st->top ? std::min(*st->top, diff.ranked.size()) : diff.ranked.size();
      for (std::size_t i = 0; i < n; ++i) {
        rows.push_back({{"synset", diff.ranked[i].synset.str()}, {"difference", diff.ranked[i].value}});
      }
    } else {
      const auto stability = pairwise_seed_correlation(reports, metric);
      j["mean_rho"] = stability.mean_rho;
      auto& pairs = j["pairs"] = nlohmann::ordered_json::array();
      for (const auto& p : stability.pairs) {
        auto entry = correlation_json(p.correlation);
        entry["a"] = reports[p.first].model_id;
        entry["b"] = reports[p.second].model_id;
        pairs.push_back(std::move(entry));
      }
    }
    emit(st->out, io.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }};
}

Command worst_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("worst", "Lowest-scoring synsets, averaged when several reports are given");
  struct State {
    std::vector<std::string> reports;
    std::string metric = "isp";
    std::size_t k = 20;
    GraphFlags graph;
    std::string out;
  };
  auto st = std::make_shared<State>();
  cmd->add_option("reports", st->reports, "Report JSON files")->required()->expected(1, -1);
  cmd->add_option("-m,--metric", st->metric, "isp or scs")->capture_default_str();
  cmd->add_option("-k", st->k, "Number of synsets")->capture_default_str();
  add_graph_flags(cmd, st->graph, false);
  cmd->add_option("-o,--out", st->out, "CSV output path (default stdout)");

  return {cmd, [st, &io] {
    const auto metric = parse_metric_kind(st->metric);
    const auto reports = read_reports(st->reports, io.in);
    const auto ranked = reports.size() == 1 ? worst_synsets(reports.front(), metric, st->k)
                                            : worst_synsets(reports, metric, st->k);
    std::optional<HierarchyGraph> graph;
    if (st->graph.given()) graph = load_graph(st->graph);
    emit(st->out, io.out, [&](std::ostream& os) {
      os << "rank,synset,value" << (graph ? ",lemma,prompt" : "") << '\n';
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        os << i + 1 << ',' << ranked[i].synset << ',' << number(ranked[i].value);
        if (graph) {
          const auto lemmas = graph->contains(ranked[i].synset) ? graph->lemmas(ranked[i].synset)
                                                                : std::span<const std::string>{};
          if (lemmas.empty()) {
            os << ",,";
          } else {
            os << ',' << display_lemma(lemmas.front()) << ",\"" << prompt_for_lemma(lemmas.front()) << '"';
          }
        }
        os << '\n';
      }
    });
  }};
}

Command subtree_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("subtree", "Average metrics over the evaluation synsets below given roots");
  struct State {
    std::string report;
    GraphFlags graph;
    std::vector<std::string> roots;
    std::string out;
  };
  auto st = std::make_shared<State>();
  cmd->add_option("report", st->report, "Report JSON file")->required();
  add_graph_flags(cmd, st->graph);
  cmd->add_option("-r,--root", st->roots, "Subtree root wnid (repeatable, default: hierarchy root)");
  cmd->add_option("-o,--out", st->out, "CSV output path (default stdout)");

  return {cmd, [st, &io] {
    const auto report = read_report(st->report, io.in);
    const auto graph = load_graph(st->graph);
    std::vector<SynsetId> roots;
    for (const auto& r : st->roots) roots.push_back(SynsetId::parse(r));
    if (roots.empty()) roots.push_back(graph.root());
    const auto rows = subtree_report(report, graph, roots);
    emit(st->out, io.out, [&](std::ostream& os) {
      os << "root,lemma,n_synsets,mean_isp,aggregate_isp,n_scs,mean_scs,aggregate_scs\n";
      for (const auto& r : rows) {
        const auto lemmas = graph.lemmas(r.root);
        os << r.root << ',' << (lemmas.empty() ? std::string() : display_lemma(lemmas.front())) << ','
           << r.n_synsets << ',' << number(r.mean_isp) << ',' << number(r.aggregate_isp) << ',' << r.n_scs << ','
           << number(r.mean_scs) << ',' << number(r.aggregate_scs) << '\n';
      }
    });
  }};
}

Command corpus_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("corpus-count", "Count captions mentioning each concept");
  struct State {
    GraphFlags graph;
    std::vector<std::string> shards;
    std::string mode = "per-caption";
    std::string lemmas = "first";
    std::optional<std::size_t> tsv_column;
    long long jobs = 1;
    std::string out;
    std::string summary;
    std::string corpus_id;
  };
  auto st = std::make_shared<State>();
  add_graph_flags(cmd, st->graph);
  cmd->add_option("shards", st->shards, "Caption files, plain or gzip")->required()->expected(1, -1);
  cmd->add_option("--mode", st->mode, "per-caption or per-occurrence")->capture_default_str();
  cmd->add_option("--lemma-policy", st->lemmas, "first or all")->capture_default_str();
  cmd->add_option("--tsv-column", st->tsv_column, "0-based tab-separated column holding the caption");
  cmd->add_option("-j,--jobs", st->jobs, "Worker threads, 0 for all cores")->capture_default_str();
  cmd->add_option("-o,--out", st->out, "Counts CSV path (default stdout)");
  cmd->add_option("--summary", st->summary, "Summary JSON path");
  cmd->add_option("--corpus-id", st->corpus_id, "Corpus name for the summary");

  return {cmd, [st, &io] {
    const auto graph = load_graph(st->graph);
    CountPolicy policy;
    policy.mode = parse_count_mode(st->mode);
    policy.lemmas = parse_lemma_policy(st->lemmas);
    policy.tsv_column = st->tsv_column;
    const ConceptCounter counter(graph, policy);
    const std::vector<std::filesystem::path> shards(st->shards.begin(), st->shards.end());
    auto id = st->corpus_id;
    if (id.empty()) id = shards.size() == 1 ? shards.front().stem().string() : "corpus";
    const auto table = counter.count_shards(shards, resolve_jobs(st->jobs), id);
    for (const auto& f : table.failed_shards) io.err << "warning: skipped unreadable shard " << f << '\n';
    if (table.failed_shards.size() == shards.size()) throw IoError("no shard could be read");
    emit(st->out, io.out, [&](std::ostream& os) { write_counts_csv(table, os); });
    if (!st->summary.empty()) emit(st->summary, io.out, [&](std::ostream& os) { write_counts_summary(table, os); });
  }};
}

Command correlate_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("correlate", "Spearman correlation of a metric with corpus counts or embeddings");
  struct State {
    std::string report;
    std::string metric = "isp";
    std::string counts;
    std::string embeddings;
    GraphFlags graph;
    std::string method = "automatic";
    std::string out;
  };
  auto st = std::make_shared<State>();
  cmd->add_option("--report", st->report, "Report JSON file")->required();
  cmd->add_option("-m,--metric", st->metric, "isp or scs")->capture_default_str();
  auto* counts = cmd->add_option("--counts", st->counts, "Counts CSV from corpus-count");
  auto* embeddings = cmd->add_option("--embeddings", st->embeddings, "Embedding JSONL (needs the graph flags)");
  counts->excludes(embeddings);
  add_graph_flags(cmd, st->graph, false);
  cmd->add_option("--p-value", st->method, "automatic, t or exact")->capture_default_str();
  cmd->add_option("-o,--out", st->out, "Output path (default stdout)");

  return {cmd, [st, &io] {
    const auto metric = parse_metric_kind(st->metric);
    const auto method = parse_spearman_method(st->method);
    const auto report = read_report(st->report, io.in);
    nlohmann::ordered_json j;
    j["metric"] = std::string(to_string(metric));
    if (!st->counts.empty()) {
      j["source"] = "counts";
      j["correlation"] = correlation_json(frequency_correlation(load_counts_csv(st->counts), report, metric, method));
    } else if (!st->embeddings.empty()) {
      const auto graph = load_graph(st->graph);
      const auto sims = hyponym_similarity(load_embeddings(std::filesystem::path(st->embeddings)), graph);
      for (const auto s : sims.skipped) io.err << "warning: no embeddings for " << s << "; skipped\n";
      j["source"] = "embeddings";
      j["correlation"] = correlation_json(similarity_metric_correlation(sims.values, report, metric, method));
      j["skipped"] = sims.skipped.size();
    } else {
      throw UsageError("correlate needs --counts or --embeddings");
    }
    emit(st->out, io.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }};
}

Command calibration_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("calibration", "Expected calibration error and reliability bins");
  struct State {
    std::string predictions;
    std::size_t bins = 100;
    std::string curve;
    std::string out;
  };
  auto st = std::make_shared<State>();
  cmd->add_option("-p,--predictions", st->predictions, "Labeled prediction JSONL")->required();
  cmd->add_option("--bins", st->bins, "Equal-width bins")->capture_default_str();
  cmd->add_option("--curve", st->curve, "Write per-bin CSV here");
  cmd->add_option("-o,--out", st->out, "Output path (default stdout)");

  return {cmd, [st, &io] {
    if (st->bins == 0) throw UsageError("--bins must be >= 1");
    const auto data = load_labeled_predictions(std::filesystem::path(st->predictions));
    const auto bins = calibration_curve(data, st->bins);
    nlohmann::ordered_json j;
    j["n"] = data.size();
    j["n_classes"] = data.n_classes();
    j["bins"] = st->bins;
    j["accuracy"] = top1_accuracy(data);
    j["ece"] = expected_calibration_error(data, st->bins);
    emit(st->out, io.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    if (!st->curve.empty()) emit(st->curve, io.out, [&](std::ostream& os) { write_calibration_csv(bins, os); });
  }};
}

Command agreement_command(CLI::App& app, Streams& io) {
  auto* cmd = app.add_subcommand("agreement", "Nominal Krippendorff's alpha of a rating table");
  struct State {
    std::string ratings;
    std::string out;
  };
  auto st = std::make_shared<State>();
  cmd->add_option("ratings", st->ratings, "CSV with item,rater,category")->required();
  cmd->add_option("-o,--out", st->out, "Output path (default stdout)");

  return {cmd, [st, &io] {
    const auto ratings = load_ratings_csv(std::filesystem::path(st->ratings));
    nlohmann::ordered_json j;
    j["items"] = ratings.items();
    j["raters"] = ratings.raters();
    j["alpha"] = krippendorff_alpha_nominal(ratings);
    emit(st->out, io.out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }};
}

}  // namespace

void register_analysis_commands(CLI::App& app, Streams& io, RunnerList& runners) {
  for (auto* make : {&compare_command, &worst_command, &subtree_command, &corpus_command, &correlate_command,
                     &calibration_command, &agreement_command}) {
    runners.push_back(make(app, io));
  }
}

}  // namespace hypereval::cli
