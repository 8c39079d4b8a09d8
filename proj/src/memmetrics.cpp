#include "mosaic/memmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mosaic/distances.hpp"
#include "mosaic/io.hpp"

namespace mosaic {

namespace {

std::vector<double> logprobs_from_json(const nlohmann::json& j, std::string_view where) {
  if (!j.is_array()) throw FormatError(fmt::format("{}: log-probabilities must be an array", where));
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError(fmt::format("{}: non-numeric log-probability", where));
    const double x = v.get<double>();
    if (!(x <= 0.0)) throw FormatError(fmt::format("{}: log-probability {} is positive or NaN", where, x));
    out.push_back(x);
  }
  return out;
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<ScoreRecord> read_scores_jsonl(const std::filesystem::path& path) {
  std::vector<ScoreRecord> out;
  io::for_each_jsonl(path, [&](const nlohmann::json& rec, std::size_t line_no) {
    const auto where = fmt::format("{}:{}", path.string(), line_no);
    try {
      ScoreRecord r;
      r.canary_id = rec.at("canary_id").get<std::string>();
      r.member = rec.at("member").get<bool>();
      r.logprobs_target = logprobs_from_json(rec.at("logprobs_target"), where);
      if (rec.contains("logprobs_ref") && !rec.at("logprobs_ref").is_null()) {
        r.logprobs_ref = logprobs_from_json(rec.at("logprobs_ref"), where);
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(fmt::format("{}: {}", where, e.what()));
    }
  });
  return out;
}

double loss_score(const ScoreRecord& rec) {
  if (rec.logprobs_target.empty()) throw InvalidArgument(fmt::format("{}: empty logprobs", rec.canary_id));
  return -mean(rec.logprobs_target);
}

double ratio_score(const ScoreRecord& rec) {
  if (!rec.logprobs_ref || rec.logprobs_ref->empty()) {
    throw InvalidArgument(fmt::format("{}: ratio score needs reference logprobs", rec.canary_id));
  }
  const double ref_loss = -mean(*rec.logprobs_ref);
  if (ref_loss == 0.0) throw InvalidArgument(fmt::format("{}: reference loss is zero", rec.canary_id));
  return loss_score(rec) / ref_loss;
}

double mink_score(const ScoreRecord& rec, double k) {
  const auto& lp = rec.logprobs_target;
  if (lp.empty()) throw InvalidArgument(fmt::format("{}: empty logprobs", rec.canary_id));
  if (!(k > 0.0 && k <= 1.0)) throw InvalidArgument(fmt::format("min-k fraction must lie in (0, 1], got {}", k));
  const auto E = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(k * static_cast<double>(lp.size()) + 1e-9)));
  std::vector<double> sorted(lp);
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(E), sorted.end());
  return mean(std::span<const double>(sorted.data(), E));
}

std::string_view to_string(ScoreMetric m) {
  switch (m) {
    case ScoreMetric::loss: return "loss";
    case ScoreMetric::ratio: return "ratio";
    case ScoreMetric::mink: return "mink";
  }
  return "?";
}

ScoreMetric score_metric_from_string(std::string_view name) {
  if (name == "loss") return ScoreMetric::loss;
  if (name == "ratio") return ScoreMetric::ratio;
  if (name == "mink") return ScoreMetric::mink;
  throw InvalidArgument(fmt::format("unknown score metric '{}'", name));
}

Orientation orientation_of(ScoreMetric m) {
  return m == ScoreMetric::mink ? Orientation::higher_is_member : Orientation::lower_is_member;
}

double score(const ScoreRecord& rec, ScoreMetric metric, double k) {
  switch (metric) {
    case ScoreMetric::loss: return loss_score(rec);
    case ScoreMetric::ratio: return ratio_score(rec);
    case ScoreMetric::mink: return mink_score(rec, k);
  }
  throw InvalidArgument("unknown score metric");
}

double roc_auc(std::span<const ScoredSample> samples, Orientation orientation) {
  std::vector<std::pair<double, bool>> v;
  v.reserve(samples.size());
  std::size_t members = 0;
  for (const auto& s : samples) {
    if (std::isnan(s.score)) throw InvalidArgument("NaN score");
    v.emplace_back(orientation == Orientation::higher_is_member ? s.score : -s.score, s.member);
    members += s.member ? 1 : 0;
  }
  const std::size_t others = v.size() - members;
  if (members == 0 || others == 0) throw InvalidArgument("AUC needs both members and non-members");
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Sum of member midranks (1-based).
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::size_t tied_members = 0;
    while (j < v.size() && v[j].first == v[i].first) tied_members += v[j++].second ? 1 : 0;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    rank_sum += midrank * static_cast<double>(tied_members);
    i = j;
  }
  const double m = static_cast<double>(members);
  return (rank_sum - m * (m + 1.0) / 2.0) / (m * static_cast<double>(others));
}

void CalibrationCurve::validate() const {
  if (points.empty()) throw InvalidArgument("calibration curve is empty");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].phi >= 0.0 && points[i].phi <= 1.0)) {
      throw InvalidArgument(fmt::format("curve phi {} outside [0, 1]", points[i].phi));
    }
    if (i > 0 && !(points[i].nu > points[i - 1].nu)) {
      throw InvalidArgument("curve nu values must be strictly increasing");
    }
  }
}

CalibrationCurve calibration_from_json(const nlohmann::json& j) {
  try {
    CalibrationCurve c;
    for (const auto& p : j.at("points")) c.points.push_back({p.at("nu").get<double>(), p.at("phi").get<double>()});
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("malformed calibration curve: {}", e.what()));
  }
}

nlohmann::json to_json(const CalibrationCurve& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve.points) points.push_back({{"nu", io::round_sig6(p.nu)}, {"phi", io::round_sig6(p.phi)}});
  return {{"points", points}};
}

CalibrationCurve smooth_curve(const CalibrationCurve& curve, std::size_t window) {
  curve.validate();
  if (window == 0 || window % 2 == 0) throw InvalidArgument("smoothing window must be odd");
  const std::size_t half = window / 2;
  const std::size_t n = curve.points.size();
  CalibrationCurve out = curve;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += curve.points[j].phi;
    out.points[i].phi = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

NuEq nu_eq(const CalibrationCurve& smoothed, double phi_tilde) {
  smoothed.validate();
  const auto& p = smoothed.points;
  if (p.size() < 2) throw InvalidArgument("nu_eq needs at least 2 curve points");
  if (!(phi_tilde >= 0.0 && phi_tilde <= 1.0)) throw InvalidArgument("observed AUC must lie in [0, 1]");
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a.phi < b.phi;
  });
  if (phi_tilde > hi->phi) {
    throw CurveExtensionRequired(fmt::format(
        "observed AUC {} exceeds the curve maximum {}; measure exact duplicates beyond nu = {}", phi_tilde, hi->phi,
        p.back().nu));
  }
  if (phi_tilde < lo->phi) {
    throw InvalidArgument(fmt::format("observed AUC {} lies below the curve minimum {}", phi_tilde, lo->phi));
  }
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[i + 1];
    if (phi_tilde < std::min(a.phi, b.phi) || phi_tilde > std::max(a.phi, b.phi)) continue;
    if (a.phi == b.phi) return NuEq{(a.nu + b.nu) / 2.0, true};
    const double t = (phi_tilde - a.phi) / (b.phi - a.phi);
    if (t == 0.0) return NuEq{a.nu, false};
    if (t == 1.0) return NuEq{b.nu, false};
    return NuEq{a.nu + t * (b.nu - a.nu), false};
  }
  throw Error("no bracketing curve segment");
}

double rho(double nu_eq, std::size_t n_dup) {
  if (n_dup < 2) throw InvalidArgument("rho needs n_dup >= 2");
  return (nu_eq - 1.0) / static_cast<double>(n_dup - 1);
}

RhoResult compute_rho(const CalibrationCurve& curve, double phi_tilde, std::size_t n_dup, std::size_t window) {
  const auto smoothed = smooth_curve(curve, window);
  const auto eq = nu_eq(smoothed, phi_tilde);
  return RhoResult{phi_tilde, eq.nu_eq, rho(eq.nu_eq, n_dup), n_dup, eq.degenerate};
}

std::vector<DistanceRhoPoint> distance_rho_table(std::span<const FuzzyDupSet> sets,
                                                 std::span<const RhoResult> results) {
  if (sets.size() != results.size()) throw InvalidArgument("one rho result per duplicate set expected");
  std::vector<DistanceRhoPoint> out;
  out.reserve(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& set = sets[i];
    double total = 0.0;
    for (std::size_t j = 1; j < set.dups.size(); ++j) total += static_cast<double>(levenshtein(set.ref, set.dups[j]));
    const double m = set.dups.size() > 1 ? total / static_cast<double>(set.dups.size() - 1) : 0.0;
    out.push_back(DistanceRhoPoint{m, results[i].rho});
  }
  return out;
}

}  // namespace mosaic
