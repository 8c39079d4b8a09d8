#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mosaic/canarygen.hpp"
#include "mosaic/error.hpp"

namespace mosaic {

/// Per-token log-probabilities (nats) for one canary.
struct ScoreRecord {
  std::string canary_id;
  bool member = false;
  std::vector<double> logprobs_target;
  std::optional<std::vector<double>> logprobs_ref;
};

/// {canary_id, member, logprobs_target, logprobs_ref?}; positive
/// log-probabilities are rejected.
std::vector<ScoreRecord> read_scores_jsonl(const std::filesystem::path& path);

/// Negative mean log-probability; lower means more member-like.
double loss_score(const ScoreRecord& rec);
/// Target loss over reference loss; lower means more member-like.
double ratio_score(const ScoreRecord& rec);
/// Mean of the E = max(1, floor(k * L)) lowest log-probabilities; higher
/// means more member-like.
double mink_score(const ScoreRecord& rec, double k = 0.20);

enum class Orientation { lower_is_member, higher_is_member };
enum class ScoreMetric { loss, ratio, mink };

std::string_view to_string(ScoreMetric m);
ScoreMetric score_metric_from_string(std::string_view name);
Orientation orientation_of(ScoreMetric m);
double score(const ScoreRecord& rec, ScoreMetric metric, double k = 0.20);

struct ScoredSample {
  double score = 0.0;
  bool member = false;
};

/// P(random member outranks random non-member), ties counting one half.
/// Throws unless both classes are present.
double roc_auc(std::span<const ScoredSample> samples, Orientation orientation);

struct CurvePoint {
  double nu = 0.0;
  double phi = 0.0;
};

struct CalibrationCurve {
  std::vector<CurvePoint> points;

  /// Throws unless nu is strictly increasing and every phi lies in [0, 1].
  void validate() const;
};

/// {"points": [{"nu", "phi"}, ...]}
CalibrationCurve calibration_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CalibrationCurve& curve);

/// Centered moving average; near the ends only the neighbours that exist are
/// averaged, so [0.5, 0.7, 0.9] with window 3 becomes [0.6, 0.7, 0.8].
CalibrationCurve smooth_curve(const CalibrationCurve& curve, std::size_t window = 3);

/// Raised when the observed AUC lies above the whole curve: more exact
/// repetitions have to be measured before nu_eq can be read off.
class CurveExtensionRequired : public Error {
 public:
  using Error::Error;
};

struct NuEq {
  double nu_eq = 0.0;
  /// The bracketing segment was flat; nu_eq is its midpoint.
  bool degenerate = false;
};

/// Piecewise-linear inverse of the curve on the first segment (from low nu)
/// that brackets phi_tilde.
NuEq nu_eq(const CalibrationCurve& smoothed, double phi_tilde);

/// (nu_eq - 1) / (n_dup - 1). Throws if n_dup < 2.
double rho(double nu_eq, std::size_t n_dup);

struct RhoResult {
  double phi_tilde = 0.0;
  double nu_eq = 0.0;
  double rho = 0.0;
  std::size_t n_dup = 0;
  bool degenerate = false;
};

/// Smooths `curve` and reads off nu_eq and rho for an observed AUC.
RhoResult compute_rho(const CalibrationCurve& curve, double phi_tilde, std::size_t n_dup,
                      std::size_t window = 3);

struct DistanceRhoPoint {
  double mean_levenshtein = 0.0;
  double rho = 0.0;
};

/// Mean levenshtein(ref, dup) over the modified duplicates (dups[1..]; 0 if
/// there are none), paired with each experiment's rho.
std::vector<DistanceRhoPoint> distance_rho_table(std::span<const FuzzyDupSet> sets,
                                                 std::span<const RhoResult> results);

}  // namespace mosaic
