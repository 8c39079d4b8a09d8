#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mosaic/corpus.hpp"

namespace mosaic {

struct ScanConfig {
  std::size_t window_length = 100;
  std::size_t step = 1;
  std::size_t max_distance = 50;
  /// Shared-token floor for the overlap prune. Defaults to
  /// window_length - max_distance; larger values would skip true matches and
  /// are rejected.
  std::optional<std::size_t> prune_min_common;
  double sample_fraction = 0.05;
  std::uint64_t seed = 0;
  /// Shuffle document order (seeded) before taking the sampled prefix.
  bool reshuffle = false;
  /// Resolve overlapping matches across all targets instead of per target.
  bool exclusive_across_targets = false;
  bool prune = true;
  /// 0 = hardware concurrency.
  std::size_t threads = 0;

  std::size_t prune_floor() const;
  /// Throws InvalidArgument on an inconsistent configuration.
  void validate() const;
};

nlohmann::json to_json(const ScanConfig& config);
ScanConfig scan_config_from_json(const nlohmann::json& j);

struct ScanTarget {
  std::string id;
  TokenSeq tokens;
};

/// Reads {"id"?, "tokens"} records; missing ids become "t<line index>".
std::vector<ScanTarget> read_targets_jsonl(const std::filesystem::path& path);
void write_targets_jsonl(std::span<const ScanTarget> targets, const std::filesystem::path& path);

struct Match {
  std::size_t target = 0;
  WindowRef window;
  std::size_t distance = 0;

  auto operator<=>(const Match&) const = default;
};

/// Incremental multiset overlap between the current window and every target.
///
/// shared(t) = sum over tokens v of min(count of v in window, count of v in
/// target t). Targets whose overlap reaches the floor are kept in an active
/// list, so a window advance costs time proportional to the targets that
/// actually contain the entering and leaving tokens.
class OverlapCounter {
 public:
  OverlapCounter(std::span<const ScanTarget> targets, std::size_t floor);

  void add(TokenId token);
  void remove(TokenId token);

  std::uint32_t shared(std::size_t target) const { return shared_[target]; }
  bool passes(std::size_t target) const { return shared_[target] >= floor_; }
  /// Targets currently at or above the floor, in no particular order.
  std::span<const std::uint32_t> active() const { return active_; }

 private:
  static constexpr std::uint32_t kNoSlot = 0xFFFFFFFFu;
  static constexpr std::uint32_t kDenseLimit = 1u << 24;

  std::uint32_t slot_of(TokenId token) const;
  void activate(std::uint32_t target);
  void deactivate(std::uint32_t target);

  std::uint32_t floor_;
  std::vector<std::uint32_t> dense_slots_;
  std::unordered_map<TokenId, std::uint32_t> sparse_slots_;
  bool dense_ = true;

  // Per slot: count inside the window and a CSR list of (target, count).
  std::vector<std::uint32_t> window_count_;
  std::vector<std::uint32_t> entry_begin_;
  std::vector<std::uint32_t> entry_target_;
  std::vector<std::uint32_t> entry_count_;

  std::vector<std::uint32_t> shared_;
  std::vector<std::uint32_t> active_;
  std::vector<std::uint32_t> active_pos_;
};

/// The documents a sampled scan covers.
struct ScanRegion {
  std::vector<std::size_t> docs;  // corpus indices in scan order
  std::size_t tokens_scanned = 0;
  std::size_t total_tokens = 0;
  double fraction_scanned = 1.0;
};

/// Leading documents (after an optional seeded shuffle) until their tokens
/// reach `fraction` of the corpus. fraction_scanned is the realised share.
ScanRegion select_scan_region(const Corpus& corpus, double fraction, bool reshuffle,
                              std::uint64_t seed);

/// Every (target, window) pair within max_distance over the region, before
/// overlap resolution, sorted by (target, doc, offset).
std::vector<Match> collect_matches(const Corpus& corpus, const ScanRegion& region,
                                   std::span<const ScanTarget> targets, const ScanConfig& config);

/// Keeps a token-disjoint subset, greedily by (distance, doc, offset); the
/// result is sorted by (target, doc, offset). Matches of different targets
/// compete with each other only when `across_targets` is set.
std::vector<Match> resolve_overlaps(std::vector<Match> matches, bool across_targets = false);

std::vector<std::uint64_t> cumulative_histogram(std::span<const std::uint64_t> raw);

/// cumulative[d] / fraction. Throws unless 0 < fraction <= 1.
std::vector<double> extrapolate_counts(std::span<const std::uint64_t> cumulative, double fraction);

struct TargetReport {
  std::string target_id;
  TokenSeq target_tokens;
  std::vector<std::uint64_t> raw_counts;
  std::vector<std::uint64_t> cumulative;
  std::vector<double> extrapolated;
  /// Retained matches, each with its window tokens.
  std::vector<Match> matches;
  std::vector<TokenSeq> match_tokens;
};

struct ScanReport {
  ScanConfig config;
  std::size_t tokens_scanned = 0;
  double fraction_scanned = 1.0;
  std::vector<TargetReport> targets;
};

/// Throws InvalidArgument if a target's length differs from window_length.
ScanReport scan_fuzzy_duplicates(const Corpus& corpus, std::span<const ScanTarget> targets,
                                 const ScanConfig& config);

nlohmann::json to_json(const ScanReport& report);
ScanReport scan_report_from_json(const nlohmann::json& j);

}  // namespace mosaic
