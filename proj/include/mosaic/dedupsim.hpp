#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mosaic/corpus.hpp"
#include "mosaic/fuzzyscan.hpp"

namespace mosaic {

/// Sequence-level dedup: a duplicate sharing any contiguous n-gram with the
/// target is removed.
struct DedupPolicy {
  std::size_t n = 50;
};

struct DuplicateRecord {
  TokenSeq tokens;
  std::size_t distance = 0;
};

struct SurvivorCurve {
  std::size_t n = 0;
  /// Indexed by distance 0..max_distance.
  std::vector<std::uint64_t> surviving_raw;
  std::vector<std::uint64_t> surviving_cumulative;
  /// Per input duplicate, in input order.
  std::vector<bool> survived;
};

/// Duplicates further than max_distance are ignored by the histogram but
/// still reported in `survived`. Throws if the target is shorter than n.
SurvivorCurve simulate_ngram_dedup(TokenSpan target, std::span<const DuplicateRecord> duplicates,
                                   const DedupPolicy& policy, std::size_t max_distance);

std::vector<SurvivorCurve> dedup_sweep(TokenSpan target, std::span<const DuplicateRecord> duplicates,
                                       std::span<const DedupPolicy> policies, std::size_t max_distance);

struct DedupRow {
  std::size_t policy_n = 0;
  std::size_t distance = 0;
  double surviving_raw = 0.0;
  double surviving_cumulative = 0.0;
};

/// Survivors per (policy, distance) averaged over the report's targets, using
/// each target's retained matches as its duplicate set.
std::vector<DedupRow> dedup_table(const ScanReport& report, std::span<const DedupPolicy> policies);

}  // namespace mosaic
