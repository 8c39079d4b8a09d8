#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mosaic/corpus.hpp"

namespace mosaic {

enum class MetricKind {
  levenshtein,
  damerau_levenshtein,
  lcs,
  hamming,
  multiset_overlap,
  jaccard_token,
  jaccard_ngram,
  kendall_tau,
};

struct DistanceMetric {
  MetricKind kind = MetricKind::levenshtein;
  /// Required for jaccard_ngram.
  std::optional<std::size_t> ngram_n;
};

std::string_view to_string(MetricKind kind);
MetricKind metric_from_string(std::string_view name);

/// Token-level edit distance (insert, delete, substitute).
std::size_t levenshtein(TokenSpan a, TokenSpan b);

/// Edit distance if it is <= cutoff, otherwise nullopt. Only the diagonal band
/// of width `cutoff` is filled and the computation stops once a whole row
/// exceeds the cutoff.
std::optional<std::size_t> levenshtein(TokenSpan a, TokenSpan b, std::size_t cutoff);

/// Reusable buffers for the banded computation in hot loops.
class BandedLevenshtein {
 public:
  std::optional<std::size_t> operator()(TokenSpan a, TokenSpan b, std::size_t cutoff);

 private:
  std::vector<std::size_t> prev_;
  std::vector<std::size_t> cur_;
};

/// Optimal-string-alignment distance: Levenshtein plus adjacent transposition.
std::size_t damerau_levenshtein(TokenSpan a, TokenSpan b);

std::size_t lcs_length(TokenSpan a, TokenSpan b);
/// max(|a|, |b|) - LCS(a, b).
std::size_t lcs_distance(TokenSpan a, TokenSpan b);

/// Differing positions. Throws InvalidArgument on length mismatch.
std::size_t hamming(TokenSpan a, TokenSpan b);

/// Size of the multiset intersection (shared tokens counting multiplicity).
std::size_t multiset_intersection_size(TokenSpan a, TokenSpan b);
/// 1 - |multiset(a) ∩ multiset(b)| / max(|a|, |b|). Throws when both are empty.
double multiset_overlap_distance(TokenSpan a, TokenSpan b);

/// 1 - |set(a) ∩ set(b)| / |set(a) ∪ set(b)|. Throws when both are empty.
double jaccard_token(TokenSpan a, TokenSpan b);

/// Jaccard distance over the sets of contiguous n-grams.
/// Throws when either sequence is shorter than n.
double jaccard_ngram(TokenSpan a, TokenSpan b, std::size_t n);

/// Inversions of a position permutation, O(L log L).
std::size_t count_inversions(std::span<const std::size_t> permutation);

/// Normalized Kendall tau distance of a position permutation: inverted pairs
/// over L(L-1)/2. Token values play no role. Throws unless the mapping is a
/// bijection on 0..L-1 with L >= 2.
double kendall_tau(std::span<const std::size_t> permutation);
/// Same, checking that the permutation covers every position of `reference`.
double kendall_tau(TokenSpan reference, std::span<const std::size_t> permutation);

/// Positions of `a` whose n-gram occurs anywhere in `b`. Throws if |a| < n.
std::size_t ngram_overlap_count(TokenSpan a, TokenSpan b, std::size_t n);

/// Dispatch on a metric. kendall_tau needs a permutation and is rejected here.
double distance(const DistanceMetric& metric, TokenSpan a, TokenSpan b);

}  // namespace mosaic
