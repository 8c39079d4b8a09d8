// mosaic: command-line front end for the duplicate-detection and
// memorization-measurement toolkit.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mosaic/canarygen.hpp"
#include "mosaic/corpus.hpp"
#include "mosaic/dedupsim.hpp"
#include "mosaic/dupfinder.hpp"
#include "mosaic/error.hpp"
#include "mosaic/fuzzyscan.hpp"
#include "mosaic/io.hpp"
#include "mosaic/memmetrics.hpp"
#include "mosaic/report.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// JSON parameter files for --config: top-level keys are global options,
// nested objects hold the options of the subcommand with that name.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(fmt::format("config file is not valid JSON: {}", e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object() && key != "params") {
        auto nested = parents;
        nested.push_back(key);
        collect(value, nested, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else if (value.is_object()) {
        item.inputs.push_back(value.dump());
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }
};

json metadata(const json& config) {
  return {{"tool", "mosaic"}, {"version", MOSAIC_VERSION}, {"config", config}};
}

void log_config(std::string_view command, const json& config) {
  spdlog::info("{}: resolved config {}", command, config.dump());
}

mosaic::Corpus load(const std::string& path, std::optional<std::uint32_t> vocab) {
  auto corpus = mosaic::load_corpus(path, mosaic::corpus_format_for(path), vocab);
  spdlog::info("loaded {} ({} docs, {} tokens)", path, corpus.docs.size(), corpus.total_tokens());
  return corpus;
}

std::vector<std::size_t> parse_sizes(const std::vector<std::string>& raw, std::string_view what) {
  std::vector<std::size_t> out;
  for (const auto& chunk : raw) {
    std::stringstream ss(chunk);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      try {
        std::size_t used = 0;
        const auto v = std::stoull(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        out.push_back(static_cast<std::size_t>(v));
      } catch (const std::exception&) {
        throw mosaic::InvalidArgument(fmt::format("bad {} value '{}'", what, item));
      }
    }
  }
  if (out.empty()) throw mosaic::InvalidArgument(fmt::format("no {} given", what));
  return out;
}

json parse_params(const std::string& text) {
  if (text.empty()) return json::object();
  if (text.front() == '@') return mosaic::io::read_json_file(text.substr(1));
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw mosaic::InvalidArgument(fmt::format("--params is not valid JSON: {}", e.what()));
  }
}

void write_jsonl(const std::string& path, const std::vector<json>& records) {
  std::string text;
  for (const auto& r : records) {
    text += r.dump();
    text += '\n';
  }
  mosaic::io::write_text_file(path, text);
}

// ---------------------------------------------------------------------------

struct Globals {
  std::size_t threads = 0;
  std::string log_level = "info";
};

struct BuildIndexArgs {
  std::string corpus, out;
  std::size_t window = 100;
  std::optional<std::uint32_t> vocab;
};

int run_build_index(const BuildIndexArgs& a) {
  log_config("build-index", {{"corpus", a.corpus}, {"window", a.window}, {"out", a.out}});
  const auto corpus = load(a.corpus, a.vocab);
  const auto index = mosaic::SuffixIndex::build(corpus, a.window);
  index.save(a.out);
  spdlog::info("suffix array over {} symbols written to {}", index.stream_size(), a.out);
  return 0;
}

struct FindExactArgs {
  std::string corpus, index, out, pattern;
  std::size_t window = 100;
  std::uint64_t min_count = 2;
  std::optional<std::uint32_t> vocab;
};

mosaic::SuffixIndex index_for(const mosaic::Corpus& corpus, const std::string& index_path, std::size_t window) {
  if (index_path.empty()) return mosaic::SuffixIndex::build(corpus, window);
  auto index = mosaic::SuffixIndex::load(index_path, corpus);
  if (index.window_length() != window) {
    spdlog::info("using the index window length {} instead of {}", index.window_length(), window);
  }
  return index;
}

int run_find_exact(const FindExactArgs& a) {
  log_config("find-exact", {{"corpus", a.corpus}, {"index", a.index}, {"window", a.window},
                            {"min_count", a.min_count}, {"pattern", a.pattern}, {"out", a.out}});
  const auto corpus = load(a.corpus, a.vocab);
  const auto index = index_for(corpus, a.index, a.window);
  if (!a.pattern.empty()) {
    const auto sizes = parse_sizes({a.pattern}, "pattern token");
    mosaic::TokenSeq pattern;
    for (const auto v : sizes) {
      if (v > 0xFFFFFFFFull) throw mosaic::InvalidArgument("pattern token exceeds 32 bits");
      pattern.push_back(static_cast<mosaic::TokenId>(v));
    }
    const auto occ = index.occurrences(pattern);
    json j = {{"pattern", pattern}, {"count", occ.size()}, {"occurrences", json::array()}};
    for (const auto& r : occ) j["occurrences"].push_back({{"doc", r.doc_index}, {"offset", r.offset}});
    if (a.out.empty()) {
      std::cout << j.dump() << '\n';
    } else {
      mosaic::io::write_text_file(a.out, j.dump() + "\n");
    }
    return 0;
  }
  const auto reps = mosaic::count_window_repetitions(index);
  std::vector<json> records;
  for (const auto& r : reps) {
    if (r.count < a.min_count) continue;
    records.push_back({{"tokens", r.tokens}, {"count", r.count}, {"doc", r.first.doc_index},
                       {"offset", r.first.offset}});
  }
  spdlog::info("{} distinct windows repeated at least {} times", records.size(), a.min_count);
  if (a.out.empty()) {
    for (const auto& r : records) std::cout << r.dump() << '\n';
  } else {
    write_jsonl(a.out, records);
  }
  return 0;
}

struct SelectTargetsArgs {
  std::string corpus, index, out;
  std::size_t window = 100;
  std::uint64_t count = 1000;
  double tolerance = 0.01;
  std::size_t sample = 100;
  std::optional<std::size_t> min_unique;
  double percentile = 0.05;
  std::uint64_t seed = 0;
  std::optional<std::uint32_t> vocab;
};

int run_select_targets(const SelectTargetsArgs& a) {
  json cfg = {{"corpus", a.corpus}, {"window", a.window}, {"count", a.count}, {"tolerance", a.tolerance},
              {"sample", a.sample}, {"percentile", a.percentile}, {"seed", a.seed}, {"out", a.out}};
  if (a.min_unique) cfg["min_unique"] = *a.min_unique;
  log_config("select-targets", cfg);
  const auto corpus = load(a.corpus, a.vocab);
  const auto index = index_for(corpus, a.index, a.window);
  std::size_t min_unique = 0;
  if (a.min_unique) {
    min_unique = *a.min_unique;
  } else {
    min_unique = mosaic::nearest_rank_percentile(mosaic::window_unique_counts(corpus, index.window_length(), 1),
                                                 a.percentile);
    spdlog::info("diversity threshold at percentile {}: {} distinct tokens", a.percentile, min_unique);
  }
  const mosaic::RepetitionBucket bucket{a.count, a.tolerance};
  const auto picked = mosaic::select_bucket_targets(mosaic::count_window_repetitions(index), bucket, a.sample,
                                                    min_unique, a.seed);
  std::vector<json> records;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    records.push_back({{"id", fmt::format("t{}", i)}, {"tokens", picked[i].tokens}, {"count", picked[i].count},
                       {"doc", picked[i].first.doc_index}, {"offset", picked[i].first.offset}});
  }
  write_jsonl(a.out, records);
  spdlog::info("selected {} targets from bucket [{}, {}]", picked.size(), bucket.lower(), bucket.upper());
  return 0;
}

struct ScanArgs {
  std::string corpus, targets, out;
  mosaic::ScanConfig config;
  std::optional<std::size_t> prune_min_common;
  bool no_prune = false;
  std::optional<std::uint32_t> vocab;
};

int run_scan(ScanArgs a, const Globals& g) {
  a.config.prune_min_common = a.prune_min_common;
  a.config.prune = !a.no_prune;
  a.config.threads = g.threads;
  a.config.validate();
  log_config("scan-fuzzy", {{"corpus", a.corpus}, {"targets", a.targets}, {"out", a.out},
                            {"scan", mosaic::to_json(a.config)}, {"threads", g.threads}});
  const auto corpus = load(a.corpus, a.vocab);
  const auto targets = mosaic::read_targets_jsonl(a.targets);
  spdlog::info("scanning for {} targets, seed {}", targets.size(), a.config.seed);
  const auto report = mosaic::scan_fuzzy_duplicates(corpus, targets, a.config);
  auto j = mosaic::to_json(report);
  j["metadata"] = metadata(mosaic::to_json(a.config));
  mosaic::io::write_text_file(a.out, j.dump() + "\n");
  std::size_t matches = 0;
  for (const auto& t : report.targets) matches += t.matches.size();
  spdlog::info("{} tokens scanned ({:.4g} of the corpus), {} matches kept, report in {}", report.tokens_scanned,
               report.fraction_scanned, matches, a.out);
  return 0;
}

struct DedupArgs {
  std::string report, out;
  std::vector<std::string> ngrams{"13,20,25,50"};
};

int run_dedup(const DedupArgs& a) {
  const auto ns = parse_sizes(a.ngrams, "n-gram size");
  log_config("simulate-dedup", {{"report", a.report}, {"ngrams", ns}, {"out", a.out}});
  const auto report = mosaic::scan_report_from_json(mosaic::io::read_json_file(a.report));
  std::vector<mosaic::DedupPolicy> policies;
  for (const auto n : ns) policies.push_back({n});
  const auto rows = mosaic::dedup_table(report, policies);
  auto bundle = mosaic::dedup_bundle(rows);
  bundle.metadata = metadata({{"report", fs::path(a.report).filename().string()}, {"ngrams", ns},
                              {"scan", mosaic::to_json(report.config)}});
  mosaic::emit(bundle, mosaic::report_format_for(a.out), a.out);
  spdlog::info("dedup table with {} rows written to {}", rows.size(), a.out);
  return 0;
}

struct GenCanariesArgs {
  std::string out;
  std::size_t count = 100, length = 100;
  std::uint32_t vocab = 50257;
  std::uint64_t seed = 0;
};

int run_gen_canaries(const GenCanariesArgs& a) {
  log_config("gen-canaries", {{"count", a.count}, {"length", a.length}, {"vocab", a.vocab}, {"seed", a.seed},
                              {"out", a.out}});
  const auto canaries = mosaic::random_canaries(a.count, a.length, a.vocab, a.seed);
  mosaic::write_canaries_jsonl(canaries, a.out);
  return 0;
}

struct GenFuzzyArgs {
  std::string canaries, algo, params, out;
  std::uint64_t seed = 0;
};

int run_gen_fuzzy(const GenFuzzyArgs& a) {
  const auto params = parse_params(a.params);
  log_config("gen-fuzzy", {{"canaries", a.canaries}, {"algo", a.algo}, {"params", params}, {"seed", a.seed},
                           {"out", a.out}});
  const auto canaries = mosaic::read_canaries_jsonl(a.canaries);
  std::vector<mosaic::FuzzyDupSet> sets;
  sets.reserve(canaries.size());
  for (std::size_t i = 0; i < canaries.size(); ++i) {
    sets.push_back(mosaic::generate(canaries[i], a.algo, params, mosaic::derive_seed(a.seed, i)));
  }
  mosaic::write_dups_jsonl(sets, fs::path(a.out));
  spdlog::info("{} duplicate sets written to {}", sets.size(), a.out);
  return 0;
}

struct InjectArgs {
  std::string corpus, dups, out, placements;
  std::uint64_t seed = 0;
  std::optional<std::uint32_t> vocab;
};

int run_inject(const InjectArgs& a) {
  log_config("inject", {{"corpus", a.corpus}, {"dups", a.dups}, {"seed", a.seed}, {"out", a.out},
                        {"placements", a.placements}});
  const auto corpus = load(a.corpus, a.vocab);
  const auto sets = mosaic::read_dups_jsonl(a.dups);
  const auto result = mosaic::inject_into_corpus(corpus, sets, a.seed);
  mosaic::save_corpus(result.corpus, a.out, mosaic::corpus_format_for(a.out));
  if (!a.placements.empty()) {
    std::vector<json> records;
    for (const auto& p : result.placements) {
      records.push_back({{"canary_id", p.canary_id}, {"dup_index", p.dup_index}, {"piece", p.piece},
                         {"doc", p.doc_index}, {"offset", p.offset}, {"length", p.length}});
    }
    write_jsonl(a.placements, records);
  }
  spdlog::info("{} pieces injected; corpus now {} tokens", result.placements.size(), result.corpus.total_tokens());
  return 0;
}

struct RhoArgs {
  std::string scores, calibration, out, metric = "loss", experiment;
  double k = 0.2;
  double param = 0.0;
  std::size_t n_dup = 10;
  std::size_t window = 3;
};

int run_compute_rho(const RhoArgs& a) {
  const json cfg = {{"scores", a.scores}, {"calibration", a.calibration}, {"metric", a.metric}, {"k", a.k},
                    {"n_dup", a.n_dup}, {"window", a.window}, {"experiment", a.experiment}, {"param", a.param}};
  log_config("compute-rho", cfg);
  const auto metric = mosaic::score_metric_from_string(a.metric);
  const auto records = mosaic::read_scores_jsonl(a.scores);
  std::vector<mosaic::ScoredSample> samples;
  samples.reserve(records.size());
  for (const auto& r : records) samples.push_back({mosaic::score(r, metric, a.k), r.member});
  const double auc = mosaic::roc_auc(samples, mosaic::orientation_of(metric));
  const auto curve = mosaic::calibration_from_json(mosaic::io::read_json_file(a.calibration));
  const auto result = mosaic::compute_rho(curve, auc, a.n_dup, a.window);
  if (result.degenerate) spdlog::warn("flat curve segment at AUC {}; nu_eq is the segment midpoint", auc);
  const json out = {{"metadata", metadata(cfg)},
                    {"experiment", a.experiment},
                    {"param", mosaic::io::round_sig6(a.param)},
                    {"phi_tilde", mosaic::io::round_sig6(result.phi_tilde)},
                    {"nu_eq", mosaic::io::round_sig6(result.nu_eq)},
                    {"rho", mosaic::io::round_sig6(result.rho)},
                    {"n_dup", result.n_dup},
                    {"degenerate", result.degenerate},
                    {"smoothed_curve", mosaic::to_json(mosaic::smooth_curve(curve, a.window))}};
  mosaic::io::write_text_file(a.out, out.dump(2) + "\n");
  spdlog::info("AUC {:.6g} -> nu_eq {:.6g}, rho {:.6g}", auc, result.nu_eq, result.rho);
  return 0;
}

struct OverlapArgs {
  std::string pairs, out;
  std::vector<std::string> ngrams{"1,2,4,8,13"};
  bool keep_identical = false;
};

int run_overlap(const OverlapArgs& a) {
  const auto ns = parse_sizes(a.ngrams, "n-gram size");
  log_config("overlap-table", {{"pairs", a.pairs}, {"ngrams", ns}, {"keep_identical", a.keep_identical},
                               {"out", a.out}});
  std::vector<mosaic::OverlapPair> pairs;
  mosaic::io::for_each_jsonl(a.pairs, [&](const json& rec, std::size_t line_no) {
    const auto where = fmt::format("{}:{}", a.pairs, line_no);
    if (!rec.contains("ref") || !rec.contains("tokens")) {
      throw mosaic::FormatError(fmt::format("{}: expected \"ref\" and \"tokens\"", where));
    }
    pairs.push_back({rec.value("group", std::string("all")), mosaic::io::tokens_from_json(rec.at("ref"), where),
                     mosaic::io::tokens_from_json(rec.at("tokens"), where)});
  });
  auto bundle = mosaic::overlap_table_bundle(pairs, ns, a.keep_identical);
  bundle.metadata = metadata(bundle.metadata);
  mosaic::emit(bundle, mosaic::report_format_for(a.out), a.out);
  return 0;
}

struct ReportArgs {
  std::string kind, out;
  std::vector<std::string> inputs;
  std::vector<std::string> dups;
  std::vector<std::string> ngrams{"13,20,25,50"};
};

int run_report(const ReportArgs& a) {
  log_config("report", {{"kind", a.kind}, {"inputs", a.inputs}, {"dups", a.dups}, {"out", a.out}});
  const auto kind = mosaic::report_kind_from_string(a.kind);
  if (a.inputs.empty()) throw mosaic::InvalidArgument("report needs at least one --inputs file");
  mosaic::ReportBundle bundle;
  json inputs = json::array();
  for (const auto& p : a.inputs) inputs.push_back(fs::path(p).filename().string());
  switch (kind) {
    case mosaic::ReportKind::scan: {
      for (const auto& p : a.inputs) {
        const auto b = mosaic::scan_bundle(mosaic::scan_report_from_json(mosaic::io::read_json_file(p)));
        if (bundle.rows.empty()) bundle.metadata = b.metadata;
        bundle.rows.insert(bundle.rows.end(), b.rows.begin(), b.rows.end());
      }
      bundle.kind = kind;
      break;
    }
    case mosaic::ReportKind::dedup: {
      const auto ns = parse_sizes(a.ngrams, "n-gram size");
      std::vector<mosaic::DedupPolicy> policies;
      for (const auto n : ns) policies.push_back({n});
      std::vector<mosaic::DedupRow> rows;
      for (const auto& p : a.inputs) {
        const auto r = mosaic::dedup_table(mosaic::scan_report_from_json(mosaic::io::read_json_file(p)), policies);
        rows.insert(rows.end(), r.begin(), r.end());
      }
      bundle = mosaic::dedup_bundle(rows);
      bundle.metadata = {{"ngrams", ns}};
      break;
    }
    case mosaic::ReportKind::rho_curve: {
      std::vector<mosaic::RhoCurveEntry> entries;
      for (const auto& p : a.inputs) {
        const auto j = mosaic::io::read_json_file(p);
        entries.push_back({j.value("experiment", fs::path(p).stem().string()), j.value("param", 0.0),
                           mosaic::RhoResult{j.at("phi_tilde").get<double>(), j.at("nu_eq").get<double>(),
                                             j.at("rho").get<double>(), j.value("n_dup", std::size_t{0}),
                                             j.value("degenerate", false)}});
      }
      bundle = mosaic::rho_curve_bundle(entries);
      break;
    }
    case mosaic::ReportKind::distance_rho: {
      if (a.dups.size() != a.inputs.size()) {
        throw mosaic::InvalidArgument("distance_rho needs one --dups file per --inputs rho file");
      }
      std::vector<mosaic::DistanceRhoEntry> entries;
      for (std::size_t i = 0; i < a.inputs.size(); ++i) {
        const auto j = mosaic::io::read_json_file(a.inputs[i]);
        const auto sets = mosaic::read_dups_jsonl(a.dups[i]);
        const mosaic::RhoResult res{j.at("phi_tilde").get<double>(), j.at("nu_eq").get<double>(),
                                    j.at("rho").get<double>(), j.value("n_dup", std::size_t{0}), false};
        const std::vector<mosaic::RhoResult> repeated(sets.size(), res);
        const auto points = mosaic::distance_rho_table(sets, repeated);
        double total = 0.0;
        for (const auto& pt : points) total += pt.mean_levenshtein;
        const double m = points.empty() ? 0.0 : total / static_cast<double>(points.size());
        entries.push_back({j.value("experiment", fs::path(a.inputs[i]).stem().string()), {m, res.rho}});
      }
      bundle = mosaic::distance_rho_bundle(entries);
      break;
    }
    case mosaic::ReportKind::overlap_table: {
      for (const auto& p : a.inputs) {
        const auto b = mosaic::bundle_from_json(mosaic::io::read_json_file(p));
        if (b.kind != kind) throw mosaic::InvalidArgument(fmt::format("{} is not an overlap_table bundle", p));
        bundle.rows.insert(bundle.rows.end(), b.rows.begin(), b.rows.end());
      }
      bundle.kind = kind;
      break;
    }
  }
  json meta = bundle.metadata;
  meta["inputs"] = inputs;
  bundle.metadata = metadata(meta);
  mosaic::emit(bundle, mosaic::report_format_for(a.out), a.out);
  spdlog::info("{} report with {} rows written to {}", a.kind, bundle.rows.size(), a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mosaic: fuzzy-duplicate detection and memorization measurement over token corpora"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MOSAIC_VERSION));
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON parameter file; command-line flags override its values");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->envname("MOSAIC_THREADS");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");

  const auto vocab_opt = [](CLI::App* sub, std::optional<std::uint32_t>& v) {
    sub->add_option("--vocab", v, "Declared vocabulary size (tokens must be below it)");
  };

  BuildIndexArgs bi;
  auto* c_bi = app.add_subcommand("build-index", "Build and save a suffix array over a corpus");
  c_bi->add_option("--corpus", bi.corpus, "Corpus (.bin or .jsonl)")->required();
  c_bi->add_option("--window", bi.window, "Window length in tokens");
  c_bi->add_option("--out", bi.out, "Output index file")->required();
  vocab_opt(c_bi, bi.vocab);

  FindExactArgs fe;
  auto* c_fe = app.add_subcommand("find-exact", "List exactly repeated windows, or count one pattern");
  c_fe->add_option("--corpus", fe.corpus, "Corpus")->required();
  c_fe->add_option("--index", fe.index, "Saved index (built on the fly when omitted)");
  c_fe->add_option("--window", fe.window, "Window length in tokens");
  c_fe->add_option("--min-count", fe.min_count, "Only report windows seen at least this often");
  c_fe->add_option("--pattern", fe.pattern, "Comma-separated token ids to count instead");
  c_fe->add_option("--out", fe.out, "Output JSONL (stdout when omitted)");
  vocab_opt(c_fe, fe.vocab);

  SelectTargetsArgs st;
  auto* c_st = app.add_subcommand("select-targets", "Sample targets from a repetition bucket");
  c_st->add_option("--corpus", st.corpus, "Corpus")->required();
  c_st->add_option("--index", st.index, "Saved index");
  c_st->add_option("--window", st.window, "Window length in tokens");
  c_st->add_option("--count", st.count, "Bucket centre (repetitions)");
  c_st->add_option("--tolerance", st.tolerance, "Relative bucket half-width");
  c_st->add_option("--sample", st.sample, "Targets to draw");
  c_st->add_option("--min-unique", st.min_unique, "Distinct-token floor (default: corpus percentile)");
  c_st->add_option("--percentile", st.percentile, "Percentile for the default floor");
  c_st->add_option("--seed", st.seed, "Sampling seed");
  c_st->add_option("--out", st.out, "Output targets JSONL")->required();
  vocab_opt(c_st, st.vocab);

  ScanArgs sc;
  auto* c_sc = app.add_subcommand("scan-fuzzy", "Count fuzzy duplicates of targets by Levenshtein distance");
  c_sc->add_option("--corpus", sc.corpus, "Corpus")->required();
  c_sc->add_option("--targets", sc.targets, "Targets JSONL")->required();
  c_sc->add_option("--max-distance", sc.config.max_distance, "Largest distance counted");
  c_sc->add_option("--window", sc.config.window_length, "Window length in tokens");
  c_sc->add_option("--step", sc.config.step, "Window step in tokens");
  c_sc->add_option("--sample", sc.config.sample_fraction, "Fraction of the corpus scanned");
  c_sc->add_option("--seed", sc.config.seed, "Seed for --reshuffle");
  c_sc->add_option("--prune-min-common", sc.prune_min_common, "Shared-token floor (default window - max distance)");
  c_sc->add_flag("--no-prune", sc.no_prune, "Compute every edit distance");
  c_sc->add_flag("--reshuffle", sc.config.reshuffle, "Shuffle document order before sampling");
  c_sc->add_flag("--exclusive-across-targets", sc.config.exclusive_across_targets,
                 "A token may count for one target only");
  c_sc->add_option("--out", sc.out, "Output report JSON")->required();
  vocab_opt(c_sc, sc.vocab);

  DedupArgs dd;
  auto* c_dd = app.add_subcommand("simulate-dedup", "Survivors of n-gram deduplication by distance");
  c_dd->add_option("--report", dd.report, "Scan report JSON")->required();
  c_dd->add_option("--ngrams", dd.ngrams, "n values, comma separated");
  c_dd->add_option("--out", dd.out, "Output table (.csv or .json)")->required();

  GenCanariesArgs gc;
  auto* c_gc = app.add_subcommand("gen-canaries", "Write seeded random reference canaries");
  c_gc->add_option("--count", gc.count, "Number of canaries");
  c_gc->add_option("--length", gc.length, "Tokens per canary");
  c_gc->add_option("--vocab", gc.vocab, "Vocabulary size");
  c_gc->add_option("--seed", gc.seed, "Seed");
  c_gc->add_option("--out", gc.out, "Output canaries JSONL")->required();

  GenFuzzyArgs gf;
  auto* c_gf = app.add_subcommand("gen-fuzzy", "Generate fuzzy duplicates of canaries");
  c_gf->add_option("--canaries", gf.canaries, "Canaries JSONL")->required();
  c_gf->add_option("--algo", gf.algo, "Generator")
      ->required()
      ->check(CLI::IsMember({"replace", "insert", "shuffle", "remove"}));
  c_gf->add_option("--params", gf.params, "Generator parameters as JSON, or @file");
  c_gf->add_option("--seed", gf.seed, "Seed");
  c_gf->add_option("--out", gf.out, "Output duplicates JSONL")->required();

  InjectArgs in;
  auto* c_in = app.add_subcommand("inject", "Insert member canaries' duplicates into a corpus");
  c_in->add_option("--corpus", in.corpus, "Host corpus")->required();
  c_in->add_option("--dups", in.dups, "Duplicates JSONL")->required();
  c_in->add_option("--seed", in.seed, "Seed");
  c_in->add_option("--out", in.out, "Output corpus")->required();
  c_in->add_option("--placements", in.placements, "Optional JSONL of where each piece went");
  vocab_opt(c_in, in.vocab);

  RhoArgs rh;
  auto* c_rh = app.add_subcommand("compute-rho", "MIA AUC to equivalent exact duplicates and rho");
  c_rh->add_option("--scores", rh.scores, "Score records JSONL")->required();
  c_rh->add_option("--metric", rh.metric, "loss, ratio or mink")->check(CLI::IsMember({"loss", "ratio", "mink"}));
  c_rh->add_option("--k", rh.k, "Min-K% fraction");
  c_rh->add_option("--calibration", rh.calibration, "Exact-duplicate curve JSON")->required();
  c_rh->add_option("--n-dup", rh.n_dup, "Duplicates per canary in the experiment");
  c_rh->add_option("--window", rh.window, "Moving-average window");
  c_rh->add_option("--experiment", rh.experiment, "Experiment label for reports");
  c_rh->add_option("--param", rh.param, "Experiment parameter value for reports");
  c_rh->add_option("--out", rh.out, "Output JSON")->required();

  OverlapArgs ov;
  auto* c_ov = app.add_subcommand("overlap-table", "n-gram overlap between references and supplied variants");
  c_ov->add_option("--pairs", ov.pairs, "JSONL of {group?, ref, tokens}")->required();
  c_ov->add_option("--ngrams", ov.ngrams, "n values, comma separated");
  c_ov->add_flag("--keep-identical", ov.keep_identical, "Keep variants identical to their reference");
  c_ov->add_option("--out", ov.out, "Output table (.csv or .json)")->required();

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "Assemble plot-ready tables from earlier outputs");
  c_rp->add_option("--kind", rp.kind, "scan, dedup, rho_curve, distance_rho or overlap_table")->required();
  c_rp->add_option("--inputs", rp.inputs, "Input files")->required();
  c_rp->add_option("--dups", rp.dups, "Duplicates JSONL per input (distance_rho)");
  c_rp->add_option("--ngrams", rp.ngrams, "n values for dedup tables");
  c_rp->add_option("--out", rp.out, "Output table (.csv or .json)")->required();

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("mosaic");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  if (g.threads == 0) g.threads = std::max(1u, std::thread::hardware_concurrency());

  try {
    if (c_bi->parsed()) return run_build_index(bi);
    if (c_fe->parsed()) return run_find_exact(fe);
    if (c_st->parsed()) return run_select_targets(st);
    if (c_sc->parsed()) return run_scan(sc, g);
    if (c_dd->parsed()) return run_dedup(dd);
    if (c_gc->parsed()) return run_gen_canaries(gc);
    if (c_gf->parsed()) return run_gen_fuzzy(gf);
    if (c_in->parsed()) return run_inject(in);
    if (c_rh->parsed()) return run_compute_rho(rh);
    if (c_ov->parsed()) return run_overlap(ov);
    if (c_rp->parsed()) return run_report(rp);
  } catch (const mosaic::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
  return 2;
}
