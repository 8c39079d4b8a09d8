#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "mosaic/canarygen.hpp"
#include "mosaic/distances.hpp"
#include "mosaic/error.hpp"
#include "mosaic/fuzzyscan.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"
#include "support/tempdir.hpp"

using namespace mosaic;

namespace {

Canary make_canary(std::uint64_t seed, std::size_t length = 100, bool distinct = false) {
  Rng rng(seed);
  Canary c;
  c.id = "c" + std::to_string(seed);
  c.tokens = distinct ? synth::distinct_tokens(rng, length, 50257) : synth::random_tokens(rng, length, 0, 50257);
  return c;
}

// Deterministic candidates: original + 1, + 2, ...; the original itself is
// listed first so callers have to filter it.
class CountingSource : public CandidateSource {
 public:
  std::vector<std::vector<TokenId>> candidates(TokenSpan tokens, std::span<const std::size_t> positions,
                                               std::size_t k) override {
    ++calls;
    std::vector<std::vector<TokenId>> out;
    for (const auto p : positions) {
      std::vector<TokenId> c = {tokens[p]};
      for (std::size_t i = 1; i <= k; ++i) c.push_back(tokens[p] + static_cast<TokenId>(i));
      out.push_back(c);
    }
    return out;
  }
  int calls = 0;
};

// True iff `sub` is a subsequence of `seq`.
bool is_subsequence(const TokenSeq& sub, const TokenSeq& seq) {
  std::size_t i = 0;
  for (std::size_t j = 0; j < seq.size() && i < sub.size(); ++j) {
    if (seq[j] == sub[i]) ++i;
  }
  return i == sub.size();
}

}  // namespace

TEST(Positions, AllPositionsWhenRIsL) {
  for (const auto s : {PositionStrategy::evenly_consistent, PositionStrategy::random_consistent,
                       PositionStrategy::random_inconsistent}) {
    const auto sets = select_positions(20, 20, s, 4, 1);
    ASSERT_EQ(sets.size(), 3u);
    std::vector<std::size_t> all(20);
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (const auto& set : sets) EXPECT_EQ(set, all);
  }
}

TEST(Positions, EvenlyOnePerSegment) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto sets = select_positions(100, 10, PositionStrategy::evenly_consistent, 10, seed);
    ASSERT_EQ(sets.size(), 9u);
    for (std::size_t r = 0; r < 10; ++r) {
      EXPECT_GE(sets[0][r], r * 10);
      EXPECT_LT(sets[0][r], (r + 1) * 10);
    }
    for (const auto& s : sets) EXPECT_EQ(s, sets[0]);
  }
}

TEST(Positions, InconsistentDiffers) {
  const auto sets = select_positions(100, 10, PositionStrategy::random_inconsistent, 10, 3);
  EXPECT_GE(std::set<std::vector<std::size_t>>(sets.begin(), sets.end()).size(), 2u);
  const auto same = select_positions(100, 10, PositionStrategy::random_consistent, 10, 3);
  EXPECT_EQ(std::set<std::vector<std::size_t>>(same.begin(), same.end()).size(), 1u);
  EXPECT_EQ(select_positions(100, 10, PositionStrategy::random_inconsistent, 10, 3), sets);
  EXPECT_THROW(select_positions(5, 6, PositionStrategy::random_consistent, 2, 0), InvalidArgument);
}

TEST(Replace, ZeroRLeavesCopies) {
  ReplaceConfig cfg;
  cfg.R = 0;
  const auto set = gen_replace(make_canary(1), cfg, 10, 5);
  ASSERT_EQ(set.dups.size(), 10u);
  for (const auto& d : set.dups) EXPECT_EQ(d, set.ref);
}

TEST(Replace, UniformVocabHammingIsR) {
  for (const auto s : {PositionStrategy::evenly_consistent, PositionStrategy::random_consistent,
                       PositionStrategy::random_inconsistent}) {
    ReplaceConfig cfg;
    cfg.strategy = s;
    const auto set = gen_replace(make_canary(2), cfg, 10, 6);
    EXPECT_EQ(set.dups[0], set.ref);
    for (std::size_t j = 1; j < set.dups.size(); ++j) {
      EXPECT_EQ(oracle::hamming(set.dups[j], set.ref), 10u);
      EXPECT_LE(oracle::levenshtein_table(set.dups[j], set.ref), 10u);
    }
  }
}

TEST(Replace, ExternalFiltersOriginalAndTruncatesToK) {
  CountingSource src;
  ReplaceConfig cfg;
  cfg.provider = ProviderKind::external_topk;
  cfg.k = 3;
  cfg.R = 5;
  const auto c = make_canary(3);
  const auto set = gen_replace(c, cfg, 6, 8, &src);
  EXPECT_EQ(src.calls, 1);
  for (std::size_t j = 1; j < set.dups.size(); ++j) {
    EXPECT_EQ(oracle::hamming(set.dups[j], set.ref), 5u);
    for (std::size_t p = 0; p < c.tokens.size(); ++p) {
      if (set.dups[j][p] == c.tokens[p]) continue;
      EXPECT_GE(set.dups[j][p], c.tokens[p] + 1);
      EXPECT_LE(set.dups[j][p], c.tokens[p] + 3);
    }
  }
  EXPECT_THROW(gen_replace(c, cfg, 6, 8, nullptr), InvalidArgument);
}

TEST(Replace, Deterministic) {
  ReplaceConfig cfg;
  cfg.strategy = PositionStrategy::random_inconsistent;
  EXPECT_EQ(gen_replace(make_canary(4), cfg, 10, 1).dups, gen_replace(make_canary(4), cfg, 10, 1).dups);
  EXPECT_NE(gen_replace(make_canary(4), cfg, 10, 1).dups, gen_replace(make_canary(4), cfg, 10, 2).dups);
}

TEST(Insert, ZeroInsertLeavesCopies) {
  const auto set = gen_insert(make_canary(5), 20, 0, 50257, 5, 1);
  for (const auto& d : set.dups) EXPECT_EQ(d, set.ref);
}

TEST(Insert, LengthAndRecovery) {
  const auto c = make_canary(6);
  const auto set = gen_insert(c, 20, 1, 50257, 10, 2);
  for (std::size_t j = 1; j < set.dups.size(); ++j) {
    const auto& d = set.dups[j];
    ASSERT_EQ(d.size(), 104u);
    TokenSeq recovered;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i % 21 != 20) recovered.push_back(d[i]);
    }
    EXPECT_EQ(recovered, c.tokens);
  }
}

TEST(Insert, UnevenGramsAndSubsequence) {
  const auto c = make_canary(7, 23);
  const auto set = gen_insert(c, 5, 3, 1000, 20, 9);
  for (std::size_t j = 1; j < set.dups.size(); ++j) {
    EXPECT_EQ(set.dups[j].size(), 23u + 3u * 4u);
    EXPECT_TRUE(is_subsequence(c.tokens, set.dups[j]));
  }
}

TEST(Insert, ScatterMode) {
  const auto set = gen_insert(make_canary(8), 20, std::nullopt, 50257, 10, 2);
  ASSERT_TRUE(set.scatter_n.has_value());
  EXPECT_EQ(*set.scatter_n, 20u);
  for (const auto& d : set.dups) EXPECT_EQ(d, set.ref);
}

TEST(Shuffle, IdentityAndReversal) {
  const auto c = make_canary(9, 50, true);
  const auto id = gen_shuffle(c, 5, 0.0, 0.0, 5, 1);
  for (std::size_t j = 0; j < id.dups.size(); ++j) {
    EXPECT_EQ(id.dups[j], c.tokens);
    EXPECT_EQ(id.achieved_tau[j], 0.0);
  }
  const auto rev = gen_shuffle(c, 1, 1.0, 0.0, 3, 1);
  auto reversed = c.tokens;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(rev.dups[1], reversed);
  EXPECT_EQ(rev.achieved_tau[1], 1.0);
}

TEST(Shuffle, TauWithinToleranceAndMultisetKept) {
  const auto c = make_canary(10, 100, true);
  for (const double tau : {0.05, 0.25, 0.5, 0.75}) {
    const auto set = gen_shuffle(c, 10, tau, 0.02, 10, 4);
    for (std::size_t j = 1; j < set.dups.size(); ++j) {
      auto a = set.dups[j], b = c.tokens;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      EXPECT_EQ(a, b);
      std::vector<std::size_t> perm;
      for (const auto t : set.dups[j]) {
        perm.push_back(static_cast<std::size_t>(std::find(c.tokens.begin(), c.tokens.end(), t) - c.tokens.begin()));
      }
      const double achieved = oracle::kendall_tau_pairs(perm);
      EXPECT_NEAR(achieved, set.achieved_tau[j], 1e-12);
      EXPECT_LE(std::abs(achieved - tau), 0.02 + 1e-12);
    }
  }
}

TEST(Shuffle, UnreachableTauThrows) {
  // Two grams of 50: tau is either 0 or 0.505.
  EXPECT_THROW(gen_shuffle(make_canary(11), 50, 0.25, 0.01, 2, 1, 3), Error);
}

TEST(Shuffle, InducedPermutation) {
  const std::vector<std::size_t> order = {2, 0, 1};
  EXPECT_EQ(induced_position_permutation(order, 2, 5), (std::vector<std::size_t>{4, 0, 1, 2, 3}));
  EXPECT_THROW(induced_position_permutation(std::vector<std::size_t>{0, 1}, 2, 5), InvalidArgument);
}

TEST(Remove, Modes) {
  const auto c = make_canary(12);
  const auto suffix = gen_remove(c, 20, RemoveMode::suffix, 5, 0);
  EXPECT_EQ(suffix.dups[1], TokenSeq(c.tokens.begin(), c.tokens.begin() + 80));
  const auto prefix = gen_remove(c, 20, RemoveMode::prefix, 5, 0);
  EXPECT_EQ(prefix.dups[1], TokenSeq(c.tokens.begin() + 20, c.tokens.end()));
  const auto even = gen_remove(c, 10, RemoveMode::random_even, 5, 3);
  for (std::size_t j = 1; j < even.dups.size(); ++j) {
    EXPECT_EQ(even.dups[j], even.dups[1]);
    EXPECT_EQ(oracle::levenshtein_table(even.dups[j], c.tokens), 10u);
    EXPECT_TRUE(is_subsequence(even.dups[j], c.tokens));
  }
  for (const auto& d : gen_remove(c, 0, RemoveMode::suffix, 3, 0).dups) EXPECT_EQ(d, c.tokens);
  EXPECT_THROW(gen_remove(c, 100, RemoveMode::suffix, 3, 0), InvalidArgument);
}

TEST(Generate, DispatchesFromJson) {
  const auto c = make_canary(13);
  const auto set = generate(c, "replace", {{"R", 4}, {"n_dup", 3}}, 1);
  EXPECT_EQ(set.dups.size(), 3u);
  EXPECT_EQ(oracle::hamming(set.dups[2], c.tokens), 4u);
  EXPECT_EQ(generate(c, "insert", {{"n", 10}, {"x_insert", "inf"}}, 1).scatter_n, 10u);
  EXPECT_EQ(generate(c, "insert", {{"n", 10}, {"x_insert", 2}}, 1).dups[1].size(), 118u);
  EXPECT_EQ(generate(c, "remove", {{"R", 5}, {"mode", "prefix"}}, 1).dups[1].size(), 95u);
  EXPECT_EQ(generate(c, "shuffle", {{"n", 1}, {"tau", 0.0}, {"tolerance", 0.0}}, 1).dups.size(), 10u);
  EXPECT_THROW(generate(c, "rotate", {}, 1), InvalidArgument);
  EXPECT_THROW(generate(c, "insert", {{"n", 10}}, 1), InvalidArgument);
}

TEST(DupsJsonl, RoundTrip) {
  testing_support::TempDir dir;
  std::vector<FuzzyDupSet> sets = {gen_shuffle(make_canary(14, 40, true), 4, 0.3, 0.05, 4, 1),
                                   gen_insert(make_canary(15, 40), 8, std::nullopt, 100, 3, 1)};
  sets[1].member = false;
  write_dups_jsonl(sets, dir / "d.jsonl");
  const auto back = read_dups_jsonl(dir / "d.jsonl");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(back[s].canary_id, sets[s].canary_id);
    EXPECT_EQ(back[s].dups, sets[s].dups);
    EXPECT_EQ(back[s].ref, sets[s].ref);
    EXPECT_EQ(back[s].member, sets[s].member);
    EXPECT_EQ(back[s].scatter_n, sets[s].scatter_n);
    EXPECT_EQ(back[s].generator.params, sets[s].generator.params);
  }
  EXPECT_EQ(back[0].achieved_tau, sets[0].achieved_tau);
  write_dups_jsonl(back, dir / "e.jsonl");
  std::ifstream a(dir / "d.jsonl"), b(dir / "e.jsonl");
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));

  std::ofstream(dir / "bad.jsonl") << "{\"canary_id\":\"x\",\"dup_index\":1,\"tokens\":[1]}\n";
  EXPECT_THROW(read_dups_jsonl(dir / "bad.jsonl"), FormatError);
}

TEST(Canaries, RandomAndJsonl) {
  const auto cs = random_canaries(7, 30, 100, 5);
  ASSERT_EQ(cs.size(), 7u);
  EXPECT_EQ(std::count_if(cs.begin(), cs.end(), [](const Canary& c) { return c.member; }), 4);
  for (const auto& c : cs) {
    EXPECT_EQ(c.tokens.size(), 30u);
    for (const auto t : c.tokens) EXPECT_LT(t, 100u);
  }
  testing_support::TempDir dir;
  auto with_meta = cs;
  with_meta[0].metadata["source"] = "synthetic";
  write_canaries_jsonl(with_meta, dir / "c.jsonl");
  const auto back = read_canaries_jsonl(dir / "c.jsonl");
  ASSERT_EQ(back.size(), 7u);
  EXPECT_EQ(back[0].metadata["source"], "synthetic");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    EXPECT_EQ(back[i].tokens, cs[i].tokens);
    EXPECT_EQ(back[i].member, cs[i].member);
  }
}

TEST(Inject, NonMembersLeaveCorpusAlone) {
  Rng rng(16);
  const auto corpus = synth::random_corpus(rng, 5, 50, 100, 1000);
  ReplaceConfig cfg;
  cfg.vocab_size = 60000;
  auto c = make_canary(16);
  c.member = false;
  const std::vector<FuzzyDupSet> sets = {gen_replace(c, cfg, 10, 1)};
  const auto r = inject_into_corpus(corpus, sets, 3);
  EXPECT_EQ(r.corpus, corpus);
  EXPECT_TRUE(r.placements.empty());
}

TEST(Inject, PlacementsPointAtDuplicates) {
  Rng rng(17);
  const auto corpus = synth::random_corpus(rng, 6, 100, 400, 1000);
  std::vector<FuzzyDupSet> sets;
  for (std::uint64_t s = 0; s < 4; ++s) {
    ReplaceConfig cfg;
    cfg.R = 3 * s;
    sets.push_back(gen_replace(make_canary(100 + s), cfg, 10, s));
  }
  sets.push_back(gen_insert(make_canary(200), 20, std::nullopt, 50257, 5, 1));
  const auto r = inject_into_corpus(corpus, sets, 9);
  EXPECT_EQ(r.corpus.total_tokens(), corpus.total_tokens() + 4 * 10 * 100 + 100 + 4 * 100);
  std::size_t pieces = 0;
  for (const auto& p : r.placements) {
    const auto& set = *std::find_if(sets.begin(), sets.end(), [&](const auto& s) { return s.canary_id == p.canary_id; });
    const TokenSpan got = window_tokens(r.corpus, {p.doc_index, p.offset, p.length});
    const auto& dup = set.dups[p.dup_index];
    const auto n = set.scatter_n.value_or(dup.size());
    const TokenSpan want(dup.data() + p.piece * n, p.length);
    EXPECT_TRUE(std::equal(got.begin(), got.end(), want.begin(), want.end()));
    pieces += p.piece > 0;
  }
  EXPECT_EQ(pieces, 4u * 4u);
  EXPECT_EQ(inject_into_corpus(corpus, sets, 9).corpus, r.corpus);
  EXPECT_THROW(inject_into_corpus(Corpus{}, sets, 9), InvalidArgument);
}

TEST(Inject, ScanFindsEachDuplicateAtItsDistance) {
  Rng rng(18);
  const auto corpus = synth::random_corpus(rng, 4, 300, 600, 4000);
  Canary c;
  c.id = "m";
  c.tokens = synth::distinct_tokens(rng, 100, 4000);
  ReplaceConfig cfg;
  cfg.vocab_size = 4000;
  cfg.R = 8;
  const std::vector<FuzzyDupSet> sets = {gen_replace(c, cfg, 10, 4)};
  const auto r = inject_into_corpus(corpus, sets, 2);
  ScanConfig sc;
  sc.sample_fraction = 1.0;
  sc.max_distance = 20;
  const std::vector<ScanTarget> targets = {{"m", c.tokens}};
  const auto report = scan_fuzzy_duplicates(r.corpus, targets, sc);
  const auto& found = report.targets[0].matches;
  for (const auto& p : r.placements) {
    const auto it = std::find_if(found.begin(), found.end(), [&](const Match& m) {
      return m.window.doc_index == p.doc_index && m.window.offset == p.offset;
    });
    ASSERT_NE(it, found.end());
    EXPECT_LE(it->distance, oracle::hamming(sets[0].dups[p.dup_index], c.tokens));
  }
  EXPECT_GE(report.targets[0].raw_counts[0], 1u);
}
