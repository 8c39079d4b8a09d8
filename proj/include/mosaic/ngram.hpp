#pragma once

#include <cstddef>
#include <unordered_set>

#include "mosaic/corpus.hpp"

namespace mosaic {

/// Set of the contiguous n-grams of one sequence, compared by content.
/// The referenced sequence must outlive the set.
class NgramSet {
 public:
  NgramSet(TokenSpan seq, std::size_t n);

  std::size_t n() const { return n_; }
  std::size_t size() const { return grams_.size(); }
  bool contains(TokenSpan gram) const;
  /// True iff `other` has at least one n-gram in this set.
  bool shares_any(TokenSpan other) const;
  /// Number of n-gram positions of `other` whose gram is in this set.
  std::size_t count_present(TokenSpan other) const;

 private:
  struct Hash {
    std::size_t operator()(TokenSpan gram) const noexcept;
  };
  struct Equal {
    bool operator()(TokenSpan a, TokenSpan b) const noexcept;
  };

  std::size_t n_;
  std::unordered_set<TokenSpan, Hash, Equal> grams_;
};

}  // namespace mosaic
