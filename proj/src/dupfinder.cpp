#include "mosaic/dupfinder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "mosaic/error.hpp"
#include "mosaic/io.hpp"

namespace mosaic {

namespace {

constexpr std::array<char, 4> kIndexMagic = {'M', 'S', 'S', 'A'};
constexpr std::uint16_t kIndexVersion = 1;

}  // namespace

std::vector<std::uint64_t> build_suffix_array(std::span<const std::uint64_t> text) {
  const std::size_t n = text.size();
  if (n == 0) return {};

  std::vector<std::uint64_t> alphabet(text.begin(), text.end());
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());

  std::vector<std::uint64_t> rank(n), next_rank(n), sa(n), by_second(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::uint64_t>(
        std::lower_bound(alphabet.begin(), alphabet.end(), text[i]) - alphabet.begin());
  }
  std::size_t classes = alphabet.size();
  std::vector<std::uint64_t> bucket(std::max(classes, n) + 1);

  // Initial order by first symbol (counting sort, ties by position).
  std::fill(bucket.begin(), bucket.begin() + classes + 1, 0);
  for (std::size_t i = 0; i < n; ++i) ++bucket[rank[i] + 1];
  for (std::size_t c = 0; c < classes; ++c) bucket[c + 1] += bucket[c];
  for (std::size_t i = 0; i < n; ++i) sa[bucket[rank[i]]++] = i;

  for (std::size_t k = 1; classes < n; k <<= 1) {
    // Order by the second half key: suffixes without one come first.
    std::size_t p = 0;
    for (std::size_t i = n - std::min(k, n); i < n; ++i) by_second[p++] = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (sa[j] >= k) by_second[p++] = sa[j] - k;
    }
    // Stable counting sort by the first half key.
    std::fill(bucket.begin(), bucket.begin() + classes + 1, 0);
    for (std::size_t i = 0; i < n; ++i) ++bucket[rank[i] + 1];
    for (std::size_t c = 0; c < classes; ++c) bucket[c + 1] += bucket[c];
    for (std::size_t j = 0; j < n; ++j) {
      const auto pos = by_second[j];
      sa[bucket[rank[pos]]++] = pos;
    }
    const auto second = [&](std::uint64_t pos) -> std::uint64_t {
      return pos + k < n ? rank[pos + k] + 1 : 0;
    };
    next_rank[sa[0]] = 0;
    for (std::size_t j = 1; j < n; ++j) {
      const auto a = sa[j - 1];
      const auto b = sa[j];
      const bool same = rank[a] == rank[b] && second(a) == second(b);
      next_rank[b] = next_rank[a] + (same ? 0 : 1);
    }
    std::swap(rank, next_rank);
    classes = static_cast<std::size_t>(rank[sa[n - 1]]) + 1;
  }
  return sa;
}

SuffixIndex SuffixIndex::build(const Corpus& corpus, std::size_t window_length) {
  if (window_length == 0) throw InvalidArgument("window length must be >= 1");
  if (corpus.docs.empty()) throw InvalidArgument("cannot index an empty corpus");
  if (std::none_of(corpus.docs.begin(), corpus.docs.end(),
                   [&](const TokenSeq& d) { return d.size() >= window_length; })) {
    throw InvalidArgument(fmt::format("corpus has no window of {} tokens", window_length));
  }

  SuffixIndex index;
  index.window_length_ = window_length;
  index.text_.reserve(corpus.total_tokens() + corpus.docs.size());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    index.doc_starts_.push_back(index.text_.size());
    index.text_.insert(index.text_.end(), corpus.docs[d].begin(), corpus.docs[d].end());
    index.text_.push_back(kMaxToken + 1 + d);
  }
  index.sa_ = build_suffix_array(index.text_);
  index.compute_lcp();
  return index;
}

void SuffixIndex::compute_lcp() {
  const std::size_t n = text_.size();
  std::vector<std::uint64_t> inverse(n);
  for (std::size_t r = 0; r < n; ++r) inverse[sa_[r]] = r;
  lcp_.assign(n, 0);
  // Kasai, with the common prefix capped at the window length.
  std::size_t h = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const auto r = inverse[pos];
    if (r == 0) {
      h = 0;
      continue;
    }
    const auto other = sa_[r - 1];
    while (h < window_length_ && pos + h < n && other + h < n && text_[pos + h] == text_[other + h]) ++h;
    lcp_[r] = static_cast<std::uint32_t>(h);
    if (h > 0) --h;
  }
}

std::uint64_t SuffixIndex::doc_of(std::uint64_t pos) const {
  const auto it = std::upper_bound(doc_starts_.begin(), doc_starts_.end(), pos);
  return static_cast<std::uint64_t>(it - doc_starts_.begin()) - 1;
}

bool SuffixIndex::window_fits(std::uint64_t pos) const {
  if (is_separator(pos)) return false;
  const auto d = doc_of(pos);
  const std::uint64_t end = d + 1 < doc_starts_.size() ? doc_starts_[d + 1] - 1 : text_.size() - 1;
  return pos + window_length_ <= end;
}

WindowRef SuffixIndex::locate(std::uint64_t pos) const {
  const auto d = doc_of(pos);
  return WindowRef{static_cast<std::size_t>(d), static_cast<std::size_t>(pos - doc_starts_[d]),
                   window_length_};
}

TokenSeq SuffixIndex::window_at(std::uint64_t pos) const {
  TokenSeq out;
  out.reserve(window_length_);
  for (std::size_t i = 0; i < window_length_; ++i) out.push_back(static_cast<TokenId>(text_[pos + i]));
  return out;
}

std::pair<std::size_t, std::size_t> SuffixIndex::equal_range(TokenSpan pattern) const {
  const std::size_t n = text_.size();
  // <0: suffix sorts before the pattern, 0: pattern is a prefix, >0: after.
  const auto compare = [&](std::uint64_t pos) {
    for (std::size_t t = 0; t < pattern.size(); ++t) {
      if (pos + t >= n) return -1;
      const auto sym = text_[pos + t];
      if (sym < pattern[t]) return -1;
      if (sym > pattern[t]) return 1;
    }
    return 0;
  };
  const auto lo = std::partition_point(sa_.begin(), sa_.end(), [&](std::uint64_t p) { return compare(p) < 0; });
  const auto hi = std::partition_point(lo, sa_.end(), [&](std::uint64_t p) { return compare(p) == 0; });
  return {static_cast<std::size_t>(lo - sa_.begin()), static_cast<std::size_t>(hi - sa_.begin())};
}

std::uint64_t SuffixIndex::count(TokenSpan pattern) const {
  if (pattern.empty()) throw InvalidArgument("empty pattern");
  const auto [lo, hi] = equal_range(pattern);
  return hi - lo;
}

std::vector<WindowRef> SuffixIndex::occurrences(TokenSpan pattern) const {
  if (pattern.empty()) throw InvalidArgument("empty pattern");
  const auto [lo, hi] = equal_range(pattern);
  std::vector<WindowRef> out;
  out.reserve(hi - lo);
  for (std::size_t r = lo; r < hi; ++r) {
    auto ref = locate(sa_[r]);
    ref.length = pattern.size();
    out.push_back(ref);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SuffixIndex::Group> SuffixIndex::window_groups(std::uint64_t min_count) const {
  std::vector<Group> groups;
  const std::size_t n = sa_.size();
  std::size_t r = 0;
  while (r < n) {
    std::size_t end = r + 1;
    while (end < n && lcp_[end] >= window_length_) ++end;
    const std::uint64_t size = end - r;
    // Two suffixes agreeing on window_length symbols cannot contain a
    // separator there (each separator is unique), so only singletons need the
    // boundary check.
    const bool valid = size >= 2 || window_fits(sa_[r]);
    if (valid && size >= min_count) groups.push_back(Group{r, size});
    r = end;
  }
  return groups;
}

std::uint64_t SuffixIndex::distinct_window_count() const { return window_groups(1).size(); }

void SuffixIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out.write(kIndexMagic.data(), kIndexMagic.size());
  io::write_u16(out, kIndexVersion);
  io::write_u64(out, window_length_);
  io::write_u64(out, sa_.size());
  for (const auto pos : sa_) io::write_u64(out, pos);
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

SuffixIndex SuffixIndex::load(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open index {}", path.string()));
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kIndexMagic) {
    throw FormatError("bad index magic (expected MSSA)");
  }
  const auto version = io::read_u16(in, "index version");
  if (version != kIndexVersion) throw FormatError(fmt::format("unsupported index version {}", version));
  const auto window_length = io::read_u64(in, "window_length");
  const auto n = io::read_u64(in, "suffix count");

  SuffixIndex index;
  index.window_length_ = static_cast<std::size_t>(window_length);
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    index.doc_starts_.push_back(index.text_.size());
    index.text_.insert(index.text_.end(), corpus.docs[d].begin(), corpus.docs[d].end());
    index.text_.push_back(kMaxToken + 1 + d);
  }
  if (n != index.text_.size()) {
    throw FormatError(fmt::format("index covers {} symbols but the corpus has {}", n, index.text_.size()));
  }
  index.sa_.resize(n);
  std::vector<bool> seen(n, false);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto pos = io::read_u64(in, "suffix position");
    if (pos >= n || seen[pos]) throw FormatError("index is not a permutation of the corpus positions");
    seen[pos] = true;
    index.sa_[i] = pos;
  }
  index.compute_lcp();
  return index;
}

RepetitionMap count_window_repetitions(const SuffixIndex& index) {
  RepetitionMap out;
  const auto sa = index.suffix_array();
  for (const auto& g : index.window_groups(2)) {
    std::uint64_t leftmost = sa[g.first_rank];
    for (std::uint64_t r = g.first_rank; r < g.first_rank + g.count; ++r) leftmost = std::min(leftmost, sa[r]);
    out.push_back(RepeatedWindow{index.window_at(leftmost), g.count, index.locate(leftmost)});
  }
  return out;
}

std::uint64_t RepetitionBucket::lower() const {
  const double v = static_cast<double>(target_count) * (1.0 - tolerance);
  return static_cast<std::uint64_t>(std::max(0.0, std::ceil(v - 1e-9)));
}

std::uint64_t RepetitionBucket::upper() const {
  const double v = static_cast<double>(target_count) * (1.0 + tolerance);
  return static_cast<std::uint64_t>(std::floor(v + 1e-9));
}

std::vector<SelectedTarget> select_bucket_targets(const RepetitionMap& counts,
                                                  const RepetitionBucket& bucket,
                                                  std::size_t sample_size,
                                                  std::size_t min_unique, std::uint64_t seed) {
  if (sample_size == 0) throw InvalidArgument("sample_size must be >= 1");
  if (bucket.tolerance < 0.0 || bucket.tolerance >= 1.0) {
    throw InvalidArgument("bucket tolerance must lie in [0, 1)");
  }
  std::vector<const RepeatedWindow*> eligible;
  for (const auto& w : counts) {
    if (bucket.contains(w.count) && unique_token_count(w.tokens) >= min_unique) eligible.push_back(&w);
  }
  if (eligible.empty()) {
    throw Error(fmt::format("no window repeated {}..{} times has >= {} distinct tokens", bucket.lower(),
                            bucket.upper(), min_unique));
  }
  Rng rng(seed);
  const auto picks = rng.sample_indices(eligible.size(), std::min(sample_size, eligible.size()));
  std::vector<SelectedTarget> out;
  out.reserve(picks.size());
  for (const auto i : picks) out.push_back(SelectedTarget{eligible[i]->tokens, eligible[i]->count, eligible[i]->first});
  return out;
}

std::size_t nearest_rank_percentile(std::vector<std::size_t> values, double percentile) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  if (!(percentile >= 0.0 && percentile <= 1.0)) throw InvalidArgument("percentile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(values.size()) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

DiversityFilter filter_low_diversity(std::span<const TokenSeq> windows, double percentile,
                                     std::span<const std::size_t> sample_unique_counts) {
  DiversityFilter result;
  result.threshold = nearest_rank_percentile(
      std::vector<std::size_t>(sample_unique_counts.begin(), sample_unique_counts.end()), percentile);
  for (const auto& w : windows) {
    if (unique_token_count(w) >= result.threshold) result.survivors.push_back(w);
  }
  return result;
}

DiversityFilter filter_low_diversity(std::span<const TokenSeq> windows, double percentile,
                                     std::span<const TokenSeq> sample) {
  std::vector<std::size_t> counts;
  counts.reserve(sample.size());
  for (const auto& w : sample) counts.push_back(unique_token_count(w));
  return filter_low_diversity(windows, percentile, std::span<const std::size_t>(counts));
}

}  // namespace mosaic
