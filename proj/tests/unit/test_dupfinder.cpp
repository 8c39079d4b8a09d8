#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "mosaic/dupfinder.hpp"
#include "mosaic/error.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"
#include "support/tempdir.hpp"

using namespace mosaic;

namespace {

Corpus one_doc(TokenSeq doc) {
  Corpus c;
  c.docs.push_back(std::move(doc));
  return c;
}

// Suffixes compared symbol by symbol, nothing clever.
std::vector<std::uint64_t> naive_suffix_array(const std::vector<std::uint64_t>& text) {
  std::vector<std::uint64_t> sa(text.size());
  for (std::size_t i = 0; i < sa.size(); ++i) sa[i] = i;
  std::sort(sa.begin(), sa.end(), [&](std::uint64_t x, std::uint64_t y) {
    return std::lexicographical_compare(text.begin() + static_cast<std::ptrdiff_t>(x), text.end(),
                                        text.begin() + static_cast<std::ptrdiff_t>(y), text.end());
  });
  return sa;
}

}  // namespace

TEST(SuffixArray, MatchesNaiveSort) {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::uint64_t> text(rng.uniform(1, 300));
    const std::uint64_t alphabet = trial % 3 == 0 ? 2 : 1 + rng.uniform(1000);
    for (auto& s : text) s = rng.uniform(alphabet);
    EXPECT_EQ(build_suffix_array(text), naive_suffix_array(text));
  }
}

TEST(SuffixIndex, RepeatedWindowExample) {
  const auto index = SuffixIndex::build(one_doc({1, 2, 3, 1, 2, 3}), 3);
  const auto reps = count_window_repetitions(index);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_EQ(reps[0].tokens, (TokenSeq{1, 2, 3}));
  EXPECT_EQ(reps[0].count, 2u);
  EXPECT_EQ(reps[0].first.offset, 0u);
  const auto occ = index.occurrences(TokenSeq{1, 2, 3});
  ASSERT_EQ(occ.size(), 2u);
  EXPECT_EQ(occ[0].offset, 0u);
  EXPECT_EQ(occ[1].offset, 3u);
}

TEST(SuffixIndex, OverlappingOccurrences) {
  const auto index = SuffixIndex::build(one_doc({5, 5, 5, 5}), 2);
  const auto reps = count_window_repetitions(index);
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_EQ(reps[0].tokens, (TokenSeq{5, 5}));
  EXPECT_EQ(reps[0].count, 3u);
}

TEST(SuffixIndex, DistinctTokensHaveNoRepeats) {
  Rng rng(22);
  const auto index = SuffixIndex::build(one_doc(synth::distinct_tokens(rng, 500, 100000)), 10);
  EXPECT_TRUE(count_window_repetitions(index).empty());
  EXPECT_EQ(index.distinct_window_count(), 491u);
  for (const auto& g : index.window_groups(1)) EXPECT_EQ(g.count, 1u);
}

TEST(SuffixIndex, NoMatchAcrossDocuments) {
  Corpus c;
  c.docs = {{1, 2}, {3, 4}, {2, 3}};
  const auto index = SuffixIndex::build(c, 2);
  EXPECT_EQ(index.count(TokenSeq{2, 3}), 1u);
  EXPECT_EQ(index.count(TokenSeq{2}), 2u);
  EXPECT_EQ(index.count(TokenSeq{4, 2}), 0u);
  EXPECT_EQ(index.distinct_window_count(), 3u);
}

TEST(SuffixIndex, CountsMatchMapOracle) {
  Rng rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const std::uint32_t vocab = trial % 2 ? 3 : 20;
    const auto c = synth::random_corpus(rng, 1 + rng.uniform(8), 0, 1200, vocab);
    const std::size_t window = 1 + rng.uniform(6);
    if (c.total_tokens() < window ||
        std::none_of(c.docs.begin(), c.docs.end(), [&](const auto& d) { return d.size() >= window; })) {
      continue;
    }
    const auto index = SuffixIndex::build(c, window);
    const auto want = oracle::window_counts(c, window);
    RepetitionMap expected;
    for (const auto& [w, n] : want) {
      if (n >= 2) expected.push_back(RepeatedWindow{w, n, {}});
    }
    auto got = count_window_repetitions(index);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].tokens, expected[i].tokens);
      EXPECT_EQ(got[i].count, expected[i].count);
      EXPECT_EQ(index.count(got[i].tokens), got[i].count);
      const auto first = window_tokens(c, got[i].first);
      EXPECT_EQ(TokenSeq(first.begin(), first.end()), got[i].tokens);
    }
    EXPECT_EQ(index.distinct_window_count(), want.size());
  }
}

TEST(SuffixIndex, LeftmostOccurrenceIsReported) {
  Corpus c;
  c.docs = {{9, 8, 7}, {1, 2, 1, 2}, {1, 2}};
  const auto reps = count_window_repetitions(SuffixIndex::build(c, 2));
  ASSERT_EQ(reps.size(), 1u);
  EXPECT_EQ(reps[0].count, 3u);
  EXPECT_EQ(reps[0].first.doc_index, 1u);
  EXPECT_EQ(reps[0].first.offset, 0u);
}

TEST(SuffixIndex, PlantedRepeatRecovered) {
  Rng rng(24);
  const auto planted = synth::random_tokens(rng, 30, 5000, 6000);
  auto c = synth::random_corpus(rng, 40, 50, 200, 5000);
  for (int i = 0; i < 57; ++i) {
    auto& doc = c.docs[rng.uniform(c.docs.size())];
    doc.insert(doc.end(), planted.begin(), planted.end());
    doc.push_back(static_cast<TokenId>(rng.uniform(5000)));
  }
  const auto index = SuffixIndex::build(c, 30);
  EXPECT_EQ(index.count(planted), 57u);
}

TEST(SuffixIndex, BuildPreconditions) {
  Corpus empty;
  EXPECT_THROW(SuffixIndex::build(empty, 3), InvalidArgument);
  EXPECT_THROW(SuffixIndex::build(one_doc({1, 2}), 3), InvalidArgument);
  EXPECT_THROW(SuffixIndex::build(one_doc({1, 2}), 0), InvalidArgument);
  const auto index = SuffixIndex::build(one_doc({1, 2, 3}), 2);
  EXPECT_THROW(index.count(TokenSeq{}), InvalidArgument);
}

TEST(SuffixIndex, SaveLoadRoundTrip) {
  testing_support::TempDir dir;
  Rng rng(25);
  const auto c = synth::random_corpus(rng, 5, 10, 100, 7);
  const auto index = SuffixIndex::build(c, 4);
  index.save(dir / "idx.mssa");
  const auto back = SuffixIndex::load(dir / "idx.mssa", c);
  EXPECT_EQ(back.window_length(), 4u);
  EXPECT_TRUE(std::equal(back.suffix_array().begin(), back.suffix_array().end(), index.suffix_array().begin(),
                         index.suffix_array().end()));
  EXPECT_EQ(count_window_repetitions(back), count_window_repetitions(index));

  auto other = c;
  other.docs[0].push_back(1);
  EXPECT_THROW(SuffixIndex::load(dir / "idx.mssa", other), FormatError);

  std::ofstream(dir / "junk.mssa") << "nope";
  EXPECT_THROW(SuffixIndex::load(dir / "junk.mssa", c), FormatError);
  EXPECT_THROW(SuffixIndex::load(dir / "missing.mssa", c), IoError);
}

TEST(Bucket, BoundsAreInclusive) {
  const RepetitionBucket b{1000, 0.01};
  EXPECT_EQ(b.lower(), 990u);
  EXPECT_EQ(b.upper(), 1010u);
  EXPECT_TRUE(b.contains(1005));
  EXPECT_TRUE(b.contains(1010));
  EXPECT_FALSE(b.contains(1011));
  EXPECT_FALSE(b.contains(989));
}

TEST(SelectTargets, FiltersAndIsDeterministic) {
  RepetitionMap counts;
  TokenSeq diverse(100);
  for (std::size_t i = 0; i < 100; ++i) diverse[i] = static_cast<TokenId>(i);
  TokenSeq dull(100);
  for (std::size_t i = 0; i < 100; ++i) dull[i] = static_cast<TokenId>(i % 40);
  counts.push_back({dull, 1005, {}});
  for (TokenId t = 0; t < 30; ++t) {
    auto w = diverse;
    w[0] = 1000 + t;
    counts.push_back({w, 995 + t % 10, {}});
  }
  counts.push_back({diverse, 5000, {}});

  const RepetitionBucket bucket{1000, 0.01};
  const auto a = select_bucket_targets(counts, bucket, 10, 46, 7);
  const auto b = select_bucket_targets(counts, bucket, 10, 46, 7);
  ASSERT_EQ(a.size(), 10u);
  std::set<TokenSeq> picked;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_NE(a[i].tokens, dull);
    EXPECT_TRUE(bucket.contains(a[i].count));
    picked.insert(a[i].tokens);
  }
  EXPECT_EQ(picked.size(), 10u);
  EXPECT_EQ(select_bucket_targets(counts, bucket, 100, 46, 7).size(), 30u);
  EXPECT_THROW(select_bucket_targets(counts, bucket, 10, 101, 7), Error);
  EXPECT_THROW(select_bucket_targets(counts, {1000, 1.5}, 10, 46, 7), InvalidArgument);
}

TEST(Diversity, Percentile) {
  EXPECT_EQ(nearest_rank_percentile({5, 1, 3, 2, 4}, 0.0), 1u);
  EXPECT_EQ(nearest_rank_percentile({5, 1, 3, 2, 4}, 0.4), 2u);
  EXPECT_EQ(nearest_rank_percentile({5, 1, 3, 2, 4}, 1.0), 5u);
  EXPECT_THROW(nearest_rank_percentile({}, 0.5), InvalidArgument);
  EXPECT_THROW(nearest_rank_percentile({1}, 1.5), InvalidArgument);
}

TEST(Diversity, CraftedFifthPercentile) {
  std::vector<std::size_t> sample(100, 80);
  for (std::size_t i = 0; i < 4; ++i) sample[i] = 30;
  sample[4] = 46;
  EXPECT_EQ(nearest_rank_percentile(sample, 0.05), 46u);
}

TEST(Diversity, UniformDiversityKeepsAll) {
  std::vector<TokenSeq> windows(10, TokenSeq{1, 2, 3, 3});
  const auto r = filter_low_diversity(windows, 0.05, std::span<const TokenSeq>(windows));
  EXPECT_EQ(r.threshold, 3u);
  EXPECT_EQ(r.survivors.size(), 10u);
}

TEST(Diversity, SurvivorsMatchRefilter) {
  Rng rng(26);
  std::vector<TokenSeq> windows;
  for (int i = 0; i < 300; ++i) windows.push_back(synth::random_tokens(rng, 50, 0, 10 + rng.uniform(60)));
  const auto r = filter_low_diversity(windows, 0.05, std::span<const TokenSeq>(windows));
  std::vector<std::size_t> uniq;
  for (const auto& w : windows) uniq.push_back(std::set<TokenId>(w.begin(), w.end()).size());
  auto sorted = uniq;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(r.threshold, sorted[14]);
  std::vector<TokenSeq> want;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (uniq[i] >= r.threshold) want.push_back(windows[i]);
  }
  EXPECT_EQ(r.survivors, want);
}
