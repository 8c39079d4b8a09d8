#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mosaic/canarygen.hpp"
#include "mosaic/corpus.hpp"
#include "mosaic/dedupsim.hpp"
#include "mosaic/distances.hpp"
#include "mosaic/dupfinder.hpp"
#include "mosaic/error.hpp"
#include "mosaic/fuzzyscan.hpp"
#include "mosaic/memmetrics.hpp"

namespace py = pybind11;
using namespace mosaic;
using nlohmann::json;

namespace {

Corpus corpus_of(std::vector<TokenSeq> docs) {
  Corpus c;
  c.docs = std::move(docs);
  return c;
}

CalibrationCurve curve_of(const std::vector<double>& nus, const std::vector<double>& phis) {
  if (nus.size() != phis.size()) throw InvalidArgument("nu and phi lists differ in length");
  CalibrationCurve c;
  for (std::size_t i = 0; i < nus.size(); ++i) c.points.push_back({nus[i], phis[i]});
  return c;
}

}  // namespace

PYBIND11_MODULE(_mosaic, m) {
  m.doc() = "Duplicate detection, fuzzy-duplicate generation and memorization metrics over token sequences.";
  py::register_exception<Error>(m, "MosaicError", PyExc_ValueError);
  m.attr("__version__") = MOSAIC_VERSION;

  m.def("levenshtein", [](const TokenSeq& a, const TokenSeq& b) { return levenshtein(a, b); });
  m.def("damerau_levenshtein", [](const TokenSeq& a, const TokenSeq& b) { return damerau_levenshtein(a, b); });
  m.def("lcs_distance", [](const TokenSeq& a, const TokenSeq& b) { return lcs_distance(a, b); });
  m.def("hamming", [](const TokenSeq& a, const TokenSeq& b) { return hamming(a, b); });
  m.def("multiset_overlap_distance",
        [](const TokenSeq& a, const TokenSeq& b) { return multiset_overlap_distance(a, b); });
  m.def("jaccard_token", [](const TokenSeq& a, const TokenSeq& b) { return jaccard_token(a, b); });
  m.def("jaccard_ngram", [](const TokenSeq& a, const TokenSeq& b, std::size_t n) { return jaccard_ngram(a, b, n); },
        py::arg("a"), py::arg("b"), py::arg("n"));
  m.def("kendall_tau", [](const std::vector<std::size_t>& perm) { return kendall_tau(perm); });

  m.def("load_corpus", [](const std::string& path) { return load_corpus(path).docs; });
  m.def("save_corpus", [](std::vector<TokenSeq> docs, const std::string& path) {
    save_corpus(corpus_of(std::move(docs)), path, corpus_format_for(path));
  });

  m.def("count_window", [](std::vector<TokenSeq> docs, const TokenSeq& pattern) {
    const auto corpus = corpus_of(std::move(docs));
    return SuffixIndex::build(corpus, pattern.size()).count(pattern);
  });
  m.def("repeated_windows", [](std::vector<TokenSeq> docs, std::size_t window) {
    const auto corpus = corpus_of(std::move(docs));
    std::vector<std::pair<TokenSeq, std::uint64_t>> out;
    for (const auto& r : count_window_repetitions(SuffixIndex::build(corpus, window))) out.emplace_back(r.tokens, r.count);
    return out;
  });

  m.def("_scan_fuzzy", [](std::vector<TokenSeq> docs, std::vector<std::pair<std::string, TokenSeq>> targets,
                          const std::string& config) {
    const auto corpus = corpus_of(std::move(docs));
    std::vector<ScanTarget> ts;
    for (auto& [id, tokens] : targets) ts.push_back({id, std::move(tokens)});
    const auto cfg = scan_config_from_json(json::parse(config));
    cfg.validate();
    py::gil_scoped_release release;
    return to_json(scan_fuzzy_duplicates(corpus, ts, cfg)).dump();
  });

  m.def("_generate", [](const std::string& id, const TokenSeq& tokens, const std::string& algo,
                        const std::string& params, std::uint64_t seed) {
    Canary c{id, tokens};
    const auto set = generate(c, algo, json::parse(params), seed);
    return std::make_pair(set.dups, set.achieved_tau);
  });

  m.def("simulate_dedup",
        [](const TokenSeq& target, const std::vector<TokenSeq>& dups, std::size_t n, std::size_t max_distance) {
          std::vector<DuplicateRecord> records;
          for (const auto& d : dups) records.push_back({d, levenshtein(target, d)});
          const auto curve = simulate_ngram_dedup(target, records, {n}, max_distance);
          return std::vector<bool>(curve.survived.begin(), curve.survived.end());
        },
        py::arg("target"), py::arg("dups"), py::arg("n"), py::arg("max_distance") = 50);

  m.def("roc_auc",
        [](const std::vector<double>& scores, const std::vector<bool>& members, bool higher_is_member) {
          if (scores.size() != members.size()) throw InvalidArgument("scores and labels differ in length");
          std::vector<ScoredSample> samples;
          for (std::size_t i = 0; i < scores.size(); ++i) samples.push_back({scores[i], members[i]});
          return roc_auc(samples, higher_is_member ? Orientation::higher_is_member : Orientation::lower_is_member);
        },
        py::arg("scores"), py::arg("members"), py::arg("higher_is_member") = true);
  m.def("smooth_curve",
        [](const std::vector<double>& nus, const std::vector<double>& phis, std::size_t window) {
          std::vector<double> out;
          for (const auto& p : smooth_curve(curve_of(nus, phis), window).points) out.push_back(p.phi);
          return out;
        },
        py::arg("nus"), py::arg("phis"), py::arg("window") = 3);
  m.def("nu_eq",
        [](const std::vector<double>& nus, const std::vector<double>& phis, double phi_tilde) {
          const auto r = nu_eq(curve_of(nus, phis), phi_tilde);
          return std::make_pair(r.nu_eq, r.degenerate);
        });
  m.def("rho", [](double nu, std::size_t n_dup) { return rho(nu, n_dup); });
}
