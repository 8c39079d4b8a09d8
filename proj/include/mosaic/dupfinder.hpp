#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mosaic/corpus.hpp"
#include "mosaic/rng.hpp"

namespace mosaic {

/// Full suffix array over the corpus token stream, with a distinct separator
/// symbol after every document so no match can run across a boundary.
///
/// The index keeps its own copy of the symbol stream; it does not borrow the
/// corpus.
class SuffixIndex {
 public:
  /// Throws InvalidArgument if the corpus has no window of `window_length`.
  static SuffixIndex build(const Corpus& corpus, std::size_t window_length);

  /// Reloads a persisted suffix array and checks it against `corpus`.
  static SuffixIndex load(const std::filesystem::path& path, const Corpus& corpus);
  void save(const std::filesystem::path& path) const;

  std::size_t window_length() const { return window_length_; }
  /// Positions into the symbol stream, lexicographically ordered suffixes.
  std::span<const std::uint64_t> suffix_array() const { return sa_; }
  std::size_t stream_size() const { return text_.size(); }
  bool is_separator(std::uint64_t pos) const { return text_[pos] > kMaxToken; }

  /// Occurrences of `pattern` (any length >= 1) inside documents.
  std::uint64_t count(TokenSpan pattern) const;
  /// Every occurrence of `pattern`, sorted by (doc, offset).
  std::vector<WindowRef> occurrences(TokenSpan pattern) const;

  /// Maps a stream position to (doc, offset) with the index's window length.
  WindowRef locate(std::uint64_t pos) const;

  /// Distinct within-document windows of window_length (count-1 included).
  std::uint64_t distinct_window_count() const;

  /// A run of suffix-array ranks sharing the same window.
  struct Group {
    std::uint64_t first_rank;  // index into suffix_array()
    std::uint64_t count;
  };
  /// Groups of identical windows occurring at least `min_count` times, in
  /// lexicographic order of the window.
  std::vector<Group> window_groups(std::uint64_t min_count) const;
  TokenSeq window_at(std::uint64_t pos) const;

 private:
  static constexpr std::uint64_t kMaxToken = 0xFFFFFFFFULL;

  bool window_fits(std::uint64_t pos) const;
  std::uint64_t doc_of(std::uint64_t pos) const;
  std::pair<std::size_t, std::size_t> equal_range(TokenSpan pattern) const;

  std::size_t window_length_ = 0;
  std::vector<std::uint64_t> text_;
  std::vector<std::uint64_t> doc_starts_;
  std::vector<std::uint64_t> sa_;
  /// lcp_[r] = common prefix of ranks r-1 and r, capped at window_length_.
  std::vector<std::uint32_t> lcp_;

  void compute_lcp();
};

/// Builds a suffix array for an integer alphabet by prefix doubling with
/// radix passes. Exposed for testing.
std::vector<std::uint64_t> build_suffix_array(std::span<const std::uint64_t> text);

struct RepeatedWindow {
  TokenSeq tokens;
  std::uint64_t count = 0;
  /// Leftmost occurrence.
  WindowRef first;

  bool operator==(const RepeatedWindow&) const = default;
};

/// Every distinct window seen at least twice, with its exact occurrence count
/// (overlapping occurrences included), in lexicographic window order.
using RepetitionMap = std::vector<RepeatedWindow>;

RepetitionMap count_window_repetitions(const SuffixIndex& index);

/// Windows repeated target_count * (1 ± tolerance) times, bounds inclusive.
struct RepetitionBucket {
  std::uint64_t target_count = 1000;
  double tolerance = 0.01;

  std::uint64_t lower() const;
  std::uint64_t upper() const;
  bool contains(std::uint64_t count) const { return count >= lower() && count <= upper(); }
};

struct SelectedTarget {
  TokenSeq tokens;
  std::uint64_t count = 0;
  WindowRef first;
};

/// Up to `sample_size` bucket members with at least `min_unique` distinct
/// tokens, drawn uniformly without replacement. Throws Error when no member
/// survives the filter.
std::vector<SelectedTarget> select_bucket_targets(const RepetitionMap& counts,
                                                  const RepetitionBucket& bucket,
                                                  std::size_t sample_size,
                                                  std::size_t min_unique, std::uint64_t seed);

/// Nearest-rank percentile: the ceil(p * N)-th smallest value (at least the
/// first). Throws on an empty sample or p outside [0, 1].
std::size_t nearest_rank_percentile(std::vector<std::size_t> values, double percentile);

struct DiversityFilter {
  std::size_t threshold = 0;
  std::vector<TokenSeq> survivors;
};

/// Threshold = percentile of distinct-token counts over `sample`; survivors
/// are the windows with at least that many distinct tokens.
DiversityFilter filter_low_diversity(std::span<const TokenSeq> windows, double percentile,
                                     std::span<const TokenSeq> sample);
/// Same, with the sample given as precomputed distinct-token counts.
DiversityFilter filter_low_diversity(std::span<const TokenSeq> windows, double percentile,
                                     std::span<const std::size_t> sample_unique_counts);

}  // namespace mosaic
