#include "mosaic/distances.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "mosaic/error.hpp"
#include "mosaic/ngram.hpp"

namespace mosaic {

namespace {

struct MetricName {
  MetricKind kind;
  std::string_view name;
};

constexpr MetricName kMetricNames[] = {
    {MetricKind::levenshtein, "levenshtein"},
    {MetricKind::damerau_levenshtein, "damerau_levenshtein"},
    {MetricKind::lcs, "lcs"},
    {MetricKind::hamming, "hamming"},
    {MetricKind::multiset_overlap, "multiset_overlap"},
    {MetricKind::jaccard_token, "jaccard_token"},
    {MetricKind::jaccard_ngram, "jaccard_ngram"},
    {MetricKind::kendall_tau, "kendall_tau"},
};

TokenSeq sorted_unique(TokenSpan s) {
  TokenSeq v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<TokenSpan> sorted_unique_ngrams(TokenSpan s, std::size_t n) {
  std::vector<TokenSpan> grams;
  for (std::size_t i = 0; i + n <= s.size(); ++i) grams.push_back(s.subspan(i, n));
  const auto less = [](TokenSpan x, TokenSpan y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  };
  const auto equal = [](TokenSpan x, TokenSpan y) {
    return std::equal(x.begin(), x.end(), y.begin(), y.end());
  };
  std::sort(grams.begin(), grams.end(), less);
  grams.erase(std::unique(grams.begin(), grams.end(), equal), grams.end());
  return grams;
}

std::size_t merge_count(std::vector<std::size_t>& v, std::vector<std::size_t>& scratch,
                        std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::size_t inv = merge_count(v, scratch, lo, mid) + merge_count(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + lo, scratch.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace

std::string_view to_string(MetricKind kind) {
  for (const auto& m : kMetricNames) {
    if (m.kind == kind) return m.name;
  }
  return "unknown";
}

MetricKind metric_from_string(std::string_view name) {
  for (const auto& m : kMetricNames) {
    if (m.name == name) return m.kind;
  }
  throw InvalidArgument(fmt::format("unknown distance metric '{}'", name));
}

std::size_t levenshtein(TokenSpan a, TokenSpan b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1] ? 1u : 0u)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::optional<std::size_t> BandedLevenshtein::operator()(TokenSpan a, TokenSpan b,
                                                         std::size_t cutoff) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t gap = n > m ? n - m : m - n;
  if (gap > cutoff) return std::nullopt;
  if (n == 0) return m;
  if (m == 0) return n;

  const std::size_t inf = cutoff + 1;
  prev_.assign(m + 1, inf);
  cur_.assign(m + 1, inf);
  for (std::size_t j = 0; j <= std::min(m, cutoff); ++j) prev_[j] = j;

  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > cutoff ? i - cutoff : 0;
    const std::size_t hi = std::min(m, i + cutoff);
    std::size_t row_min = inf;
    std::size_t j = lo;
    if (j == 0) {
      cur_[0] = i;
      row_min = i;
      j = 1;
    } else {
      cur_[lo - 1] = inf;
    }
    const TokenId ai = a[i - 1];
    for (; j <= hi; ++j) {
      std::size_t v = prev_[j - 1] + (ai != b[j - 1] ? 1 : 0);
      v = std::min(v, prev_[j] + 1);
      v = std::min(v, cur_[j - 1] + 1);
      v = std::min(v, inf);
      cur_[j] = v;
      row_min = std::min(row_min, v);
    }
    if (hi < m) cur_[hi + 1] = inf;
    if (row_min > cutoff) return std::nullopt;
    std::swap(prev_, cur_);
  }
  if (prev_[m] > cutoff) return std::nullopt;
  return prev_[m];
}

std::optional<std::size_t> levenshtein(TokenSpan a, TokenSpan b, std::size_t cutoff) {
  BandedLevenshtein banded;
  return banded(a, b, cutoff);
}

std::size_t damerau_levenshtein(TokenSpan a, TokenSpan b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::size_t> prev2(m + 1), prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t cost = a[i - 1] != b[j - 1] ? 1 : 0;
      std::size_t v = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
        v = std::min(v, prev2[j - 2] + 1);
      }
      cur[j] = v;
    }
    std::swap(prev2, prev);
    std::swap(prev, cur);
  }
  return prev[m];
}

std::size_t lcs_length(TokenSpan a, TokenSpan b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t lcs_distance(TokenSpan a, TokenSpan b) {
  return std::max(a.size(), b.size()) - lcs_length(a, b);
}

std::size_t hamming(TokenSpan a, TokenSpan b) {
  if (a.size() != b.size()) {
    throw InvalidArgument(fmt::format("hamming distance needs equal lengths ({} vs {})", a.size(), b.size()));
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1 : 0;
  return d;
}

std::size_t multiset_intersection_size(TokenSpan a, TokenSpan b) {
  TokenSeq x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t shared = 0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] < y[j]) {
      ++i;
    } else if (y[j] < x[i]) {
      ++j;
    } else {
      ++shared;
      ++i;
      ++j;
    }
  }
  return shared;
}

double multiset_overlap_distance(TokenSpan a, TokenSpan b) {
  if (a.empty() && b.empty()) throw InvalidArgument("multiset overlap of two empty sequences");
  const auto denom = static_cast<double>(std::max(a.size(), b.size()));
  return 1.0 - static_cast<double>(multiset_intersection_size(a, b)) / denom;
}

double jaccard_token(TokenSpan a, TokenSpan b) {
  if (a.empty() && b.empty()) throw InvalidArgument("jaccard distance of two empty sequences");
  const auto x = sorted_unique(a);
  const auto y = sorted_unique(b);
  std::size_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] < y[j]) {
      ++i;
    } else if (y[j] < x[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = x.size() + y.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard_ngram(TokenSpan a, TokenSpan b, std::size_t n) {
  if (n == 0) throw InvalidArgument("n-gram length must be >= 1");
  if (a.size() < n || b.size() < n) {
    throw InvalidArgument(fmt::format("jaccard_ngram needs sequences of at least n={} tokens", n));
  }
  const auto x = sorted_unique_ngrams(a, n);
  const auto y = sorted_unique_ngrams(b, n);
  const auto less = [](TokenSpan p, TokenSpan q) {
    return std::lexicographical_compare(p.begin(), p.end(), q.begin(), q.end());
  };
  std::size_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (less(x[i], y[j])) {
      ++i;
    } else if (less(y[j], x[i])) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = x.size() + y.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t count_inversions(std::span<const std::size_t> permutation) {
  std::vector<std::size_t> v(permutation.begin(), permutation.end());
  std::vector<std::size_t> scratch(v.size());
  return merge_count(v, scratch, 0, v.size());
}

double kendall_tau(std::span<const std::size_t> permutation) {
  const std::size_t L = permutation.size();
  if (L < 2) throw InvalidArgument("kendall tau needs at least two positions");
  std::vector<bool> seen(L, false);
  for (const auto p : permutation) {
    if (p >= L || seen[p]) throw InvalidArgument("kendall tau needs a bijection on positions");
    seen[p] = true;
  }
  const double pairs = static_cast<double>(L) * static_cast<double>(L - 1) / 2.0;
  return static_cast<double>(count_inversions(permutation)) / pairs;
}

double kendall_tau(TokenSpan reference, std::span<const std::size_t> permutation) {
  if (reference.size() != permutation.size()) {
    throw InvalidArgument("permutation length differs from the reference length");
  }
  return kendall_tau(permutation);
}

std::size_t ngram_overlap_count(TokenSpan a, TokenSpan b, std::size_t n) {
  if (n == 0) throw InvalidArgument("n-gram length must be >= 1");
  if (a.size() < n) throw InvalidArgument(fmt::format("sequence shorter than n={}", n));
  const NgramSet in_b(b, n);
  return in_b.count_present(a);
}

double distance(const DistanceMetric& metric, TokenSpan a, TokenSpan b) {
  switch (metric.kind) {
    case MetricKind::levenshtein:
      return static_cast<double>(levenshtein(a, b));
    case MetricKind::damerau_levenshtein:
      return static_cast<double>(damerau_levenshtein(a, b));
    case MetricKind::lcs:
      return static_cast<double>(lcs_distance(a, b));
    case MetricKind::hamming:
      return static_cast<double>(hamming(a, b));
    case MetricKind::multiset_overlap:
      return multiset_overlap_distance(a, b);
    case MetricKind::jaccard_token:
      return jaccard_token(a, b);
    case MetricKind::jaccard_ngram:
      if (!metric.ngram_n) throw InvalidArgument("jaccard_ngram requires ngram_n");
      return jaccard_ngram(a, b, *metric.ngram_n);
    case MetricKind::kendall_tau:
      break;
  }
  throw InvalidArgument("kendall_tau is defined on a permutation, not a sequence pair");
}

}  // namespace mosaic
