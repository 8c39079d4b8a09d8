#include "mosaic/dedupsim.hpp"

#include <fmt/format.h>

#include "mosaic/error.hpp"
#include "mosaic/ngram.hpp"

namespace mosaic {

SurvivorCurve simulate_ngram_dedup(TokenSpan target, std::span<const DuplicateRecord> duplicates,
                                   const DedupPolicy& policy, std::size_t max_distance) {
  if (policy.n == 0) throw InvalidArgument("dedup n-gram length must be >= 1");
  if (target.size() < policy.n) {
    throw InvalidArgument(fmt::format("target has {} tokens, fewer than n = {}", target.size(), policy.n));
  }
  const NgramSet grams(target, policy.n);
  SurvivorCurve curve;
  curve.n = policy.n;
  curve.surviving_raw.assign(max_distance + 1, 0);
  curve.survived.reserve(duplicates.size());
  for (const auto& dup : duplicates) {
    const bool survives = !grams.shares_any(dup.tokens);
    curve.survived.push_back(survives);
    if (survives && dup.distance <= max_distance) ++curve.surviving_raw[dup.distance];
  }
  curve.surviving_cumulative = cumulative_histogram(curve.surviving_raw);
  return curve;
}

std::vector<SurvivorCurve> dedup_sweep(TokenSpan target, std::span<const DuplicateRecord> duplicates,
                                       std::span<const DedupPolicy> policies, std::size_t max_distance) {
  std::vector<SurvivorCurve> curves;
  curves.reserve(policies.size());
  for (const auto& p : policies) curves.push_back(simulate_ngram_dedup(target, duplicates, p, max_distance));
  return curves;
}

std::vector<DedupRow> dedup_table(const ScanReport& report, std::span<const DedupPolicy> policies) {
  const std::size_t max_distance = report.config.max_distance;
  std::vector<DedupRow> rows;
  for (const auto& p : policies) {
    std::vector<double> raw(max_distance + 1, 0.0);
    std::vector<double> cum(max_distance + 1, 0.0);
    for (const auto& tr : report.targets) {
      if (tr.target_tokens.empty()) {
        throw FormatError(fmt::format("scan report target {} carries no target_tokens", tr.target_id));
      }
      std::vector<DuplicateRecord> dups;
      dups.reserve(tr.matches.size());
      for (std::size_t i = 0; i < tr.matches.size(); ++i) {
        dups.push_back(DuplicateRecord{tr.match_tokens[i], tr.matches[i].distance});
      }
      const auto curve = simulate_ngram_dedup(tr.target_tokens, dups, p, max_distance);
      for (std::size_t d = 0; d <= max_distance; ++d) {
        raw[d] += static_cast<double>(curve.surviving_raw[d]);
        cum[d] += static_cast<double>(curve.surviving_cumulative[d]);
      }
    }
    const double denom = report.targets.empty() ? 1.0 : static_cast<double>(report.targets.size());
    for (std::size_t d = 0; d <= max_distance; ++d) {
      rows.push_back(DedupRow{p.n, d, raw[d] / denom, cum[d] / denom});
    }
  }
  return rows;
}

}  // namespace mosaic
