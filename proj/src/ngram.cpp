#include "mosaic/ngram.hpp"

#include <algorithm>

#include "mosaic/error.hpp"

namespace mosaic {

std::size_t NgramSet::Hash::operator()(TokenSpan gram) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto t : gram) {
    h ^= t;
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

bool NgramSet::Equal::operator()(TokenSpan a, TokenSpan b) const noexcept {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

NgramSet::NgramSet(TokenSpan seq, std::size_t n) : n_(n) {
  if (n == 0) throw InvalidArgument("n-gram length must be >= 1");
  if (seq.size() < n) return;
  grams_.reserve(seq.size() - n + 1);
  for (std::size_t i = 0; i + n <= seq.size(); ++i) grams_.insert(seq.subspan(i, n));
}

bool NgramSet::contains(TokenSpan gram) const {
  return gram.size() == n_ && grams_.contains(gram);
}

bool NgramSet::shares_any(TokenSpan other) const {
  if (grams_.empty()) return false;
  for (std::size_t i = 0; i + n_ <= other.size(); ++i) {
    if (grams_.contains(other.subspan(i, n_))) return true;
  }
  return false;
}

std::size_t NgramSet::count_present(TokenSpan other) const {
  std::size_t count = 0;
  for (std::size_t i = 0; i + n_ <= other.size(); ++i) {
    if (grams_.contains(other.subspan(i, n_))) ++count;
  }
  return count;
}

}  // namespace mosaic
