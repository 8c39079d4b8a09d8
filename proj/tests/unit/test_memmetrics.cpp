#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <memory>
#include <numeric>

#include "mosaic/error.hpp"
#include "mosaic/memmetrics.hpp"
#include "mosaic/rng.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace mosaic;

namespace {

ScoreRecord rec(std::vector<double> target, std::optional<std::vector<double>> ref = std::nullopt) {
  return ScoreRecord{"c", true, std::move(target), std::move(ref)};
}

std::vector<double> random_logprobs(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = -10.0 * rng.uniform01();
  return v;
}

CalibrationCurve curve_of(std::vector<double> nus, std::vector<double> phis) {
  CalibrationCurve c;
  for (std::size_t i = 0; i < nus.size(); ++i) c.points.push_back({nus[i], phis[i]});
  return c;
}

}  // namespace

TEST(Loss, Examples) {
  EXPECT_DOUBLE_EQ(loss_score(rec(std::vector<double>(7, -1.0))), 1.0);
  EXPECT_DOUBLE_EQ(loss_score(rec({-2.0, -4.0})), 3.0);
  EXPECT_THROW(loss_score(rec({})), InvalidArgument);
}

TEST(Loss, MatchesMeanOracle) {
  Rng rng(51);
  for (int i = 0; i < 200; ++i) {
    const auto v = random_logprobs(rng, 1 + rng.uniform(200));
    long double s = 0;
    for (const auto x : v) s += x;
    EXPECT_NEAR(loss_score(rec(v)), -static_cast<double>(s / v.size()), 1e-12);
  }
}

TEST(Ratio, Examples) {
  EXPECT_DOUBLE_EQ(ratio_score(rec({-1.5, -2.5}, std::vector<double>{-1.5, -2.5})), 1.0);
  EXPECT_DOUBLE_EQ(ratio_score(rec({-1.0}, std::vector<double>{-2.0})), 0.5);
  EXPECT_THROW(ratio_score(rec({-1.0})), InvalidArgument);
  EXPECT_THROW(ratio_score(rec({-1.0}, std::vector<double>{0.0})), InvalidArgument);
}

TEST(Ratio, MatchesDivision) {
  Rng rng(52);
  for (int i = 0; i < 200; ++i) {
    const auto t = random_logprobs(rng, 1 + rng.uniform(50));
    const auto r = random_logprobs(rng, 1 + rng.uniform(50));
    const double lt = -std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
    const double lr = -std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    EXPECT_NEAR(ratio_score(rec(t, r)), lt / lr, 1e-12);
  }
}

TEST(MinK, Examples) {
  const std::vector<double> v = {-1, -9, -2, -8, -3, -4, -5, -6, -7, -0.5};
  EXPECT_DOUBLE_EQ(mink_score(rec(v), 0.2), -8.5);
  EXPECT_DOUBLE_EQ(mink_score(rec(std::vector<double>(9, -3.0))), -3.0);
  EXPECT_DOUBLE_EQ(mink_score(rec({-1.0, -2.0}), 0.1), -2.0);
  EXPECT_THROW(mink_score(rec(v), 0.0), InvalidArgument);
  EXPECT_THROW(mink_score(rec(v), 1.5), InvalidArgument);
}

TEST(MinK, MatchesSortAndSlice) {
  Rng rng(53);
  for (int i = 0; i < 200; ++i) {
    const auto v = random_logprobs(rng, 1 + rng.uniform(100));
    const double k = 0.05 + 0.95 * rng.uniform01();
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto E = std::max<std::size_t>(1, static_cast<std::size_t>(k * static_cast<double>(v.size()) + 1e-9));
    const double want = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(E), 0.0) /
                        static_cast<double>(E);
    EXPECT_NEAR(mink_score(rec(v), k), want, 1e-12);
  }
}

TEST(MinK, FullFractionIsMean) {
  Rng rng(54);
  for (int i = 0; i < 100; ++i) {
    const auto v = random_logprobs(rng, 1 + rng.uniform(100));
    EXPECT_NEAR(mink_score(rec(v), 1.0), -loss_score(rec(v)), 1e-12);
  }
}

TEST(Auc, Examples) {
  const std::vector<ScoredSample> perfect = {{1.0, false}, {2.0, false}, {3.0, true}, {4.0, true}};
  EXPECT_EQ(roc_auc(perfect, Orientation::higher_is_member), 1.0);
  EXPECT_EQ(roc_auc(perfect, Orientation::lower_is_member), 0.0);
  const std::vector<ScoredSample> ties = {{1.0, false}, {1.0, true}, {1.0, true}};
  EXPECT_EQ(roc_auc(ties, Orientation::higher_is_member), 0.5);
  const std::vector<ScoredSample> one_class = {{1.0, true}};
  EXPECT_THROW(roc_auc(one_class, Orientation::higher_is_member), InvalidArgument);
}

TEST(Auc, MatchesPairCounting) {
  Rng rng(55);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 2 + rng.uniform(19);
    std::vector<ScoredSample> s(n);
    std::vector<double> scores(n);
    std::unique_ptr<bool[]> member(new bool[n]);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = {static_cast<double>(rng.uniform(6)), j == 0 ? true : j == 1 ? false : rng.coin()};
      scores[j] = s[j].score;
      member[j] = s[j].member;
    }
    const std::span<const bool> fs(member.get(), n);
    EXPECT_NEAR(roc_auc(s, Orientation::higher_is_member), oracle::auc_pairs(scores, fs, true), 1e-12);
    EXPECT_NEAR(roc_auc(s, Orientation::lower_is_member), oracle::auc_pairs(scores, fs, false), 1e-12);
    EXPECT_NEAR(roc_auc(s, Orientation::lower_is_member), 1.0 - roc_auc(s, Orientation::higher_is_member), 1e-12);
  }
}

TEST(Smooth, Examples) {
  const auto flat = curve_of({1, 2, 3, 4}, {0.6, 0.6, 0.6, 0.6});
  for (const auto& p : smooth_curve(flat).points) EXPECT_DOUBLE_EQ(p.phi, 0.6);
  const auto s = smooth_curve(curve_of({1, 2, 3}, {0.5, 0.7, 0.9}));
  EXPECT_NEAR(s.points[0].phi, 0.6, 1e-12);
  EXPECT_NEAR(s.points[1].phi, 0.7, 1e-12);
  EXPECT_NEAR(s.points[2].phi, 0.8, 1e-12);
  EXPECT_EQ(s.points[2].nu, 3.0);
  EXPECT_THROW(smooth_curve(flat, 2), InvalidArgument);
}

TEST(Smooth, MatchesConvolution) {
  Rng rng(56);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + rng.uniform(30);
    CalibrationCurve c;
    std::vector<double> phis;
    for (std::size_t j = 0; j < n; ++j) {
      c.points.push_back({static_cast<double>(j + 1), rng.uniform01()});
      phis.push_back(c.points.back().phi);
    }
    const std::size_t w = 1 + 2 * rng.uniform(4);
    const auto got = smooth_curve(c, w);
    const auto want = oracle::moving_average(phis, w);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(got.points[j].phi, want[j], 1e-12);
  }
}

TEST(NuEq, InvertsCurvePoints) {
  const auto c = curve_of({1, 2, 4, 6, 7, 10}, {0.51, 0.6, 0.8, 0.93, 0.95, 0.99});
  for (const auto& p : c.points) {
    const auto r = nu_eq(c, p.phi);
    EXPECT_EQ(r.nu_eq, p.nu);
    EXPECT_FALSE(r.degenerate);
  }
  EXPECT_NEAR(nu_eq(curve_of({6, 7}, {0.93, 0.95}), 0.94).nu_eq, 6.5, 1e-12);
}

TEST(NuEq, EdgeCases) {
  const auto c = curve_of({1, 2, 3, 4}, {0.5, 0.7, 0.7, 0.9});
  const auto flat = nu_eq(curve_of({1, 2, 3}, {0.5, 0.7, 0.7}), 0.7);
  EXPECT_FALSE(flat.degenerate);
  EXPECT_EQ(flat.nu_eq, 2.0);
  const auto mid = nu_eq(curve_of({1, 2, 3, 4}, {0.5, 0.5, 0.5, 0.9}), 0.5);
  EXPECT_TRUE(mid.degenerate);
  EXPECT_EQ(mid.nu_eq, 1.5);
  const auto deg = nu_eq(curve_of({1, 3, 5}, {0.4, 0.6, 0.6}), 0.6);
  EXPECT_EQ(deg.nu_eq, 3.0);
  const auto only_flat = nu_eq(curve_of({2, 4}, {0.6, 0.6}), 0.6);
  EXPECT_TRUE(only_flat.degenerate);
  EXPECT_EQ(only_flat.nu_eq, 3.0);
  EXPECT_THROW(nu_eq(c, 0.95), CurveExtensionRequired);
  EXPECT_THROW(nu_eq(c, 0.4), InvalidArgument);
  EXPECT_THROW(nu_eq(curve_of({1}, {0.5}), 0.5), InvalidArgument);
}

TEST(Rho, FixedPoints) {
  EXPECT_DOUBLE_EQ(rho(10.0, 10), 1.0);
  EXPECT_DOUBLE_EQ(rho(1.0, 10), 0.0);
  EXPECT_NEAR(rho(6.36, 10), 0.5956, 1e-4);
  EXPECT_THROW(rho(1.0, 1), InvalidArgument);
}

TEST(Rho, ComputeFromCurve) {
  const auto c = curve_of({1, 2, 3, 4, 5}, {0.5, 0.6, 0.7, 0.8, 0.9});
  const auto r = compute_rho(c, 0.65, 5, 1);
  EXPECT_NEAR(r.nu_eq, 2.5, 1e-12);
  EXPECT_NEAR(r.rho, 0.375, 1e-12);
}

TEST(Curve, JsonAndValidation) {
  const auto c = curve_of({1, 2}, {0.5, 0.6});
  const auto back = calibration_from_json(to_json(c));
  EXPECT_EQ(back.points.size(), 2u);
  EXPECT_THROW(calibration_from_json(nlohmann::json{{"points", {{{"nu", 2}, {"phi", 0.5}}, {{"nu", 1}, {"phi", 0.5}}}}}),
               InvalidArgument);
  EXPECT_THROW(calibration_from_json(nlohmann::json{{"points", {{{"nu", 1}, {"phi", 1.5}}}}}), InvalidArgument);
  EXPECT_THROW(calibration_from_json(nlohmann::json{{"dots", 1}}), FormatError);
}

TEST(Scores, Jsonl) {
  testing_support::TempDir dir;
  {
    std::ofstream out(dir / "s.jsonl");
    out << "{\"canary_id\":\"a\",\"member\":true,\"logprobs_target\":[-1,-2],\"logprobs_ref\":[-2,-2]}\n";
    out << "{\"canary_id\":\"b\",\"member\":false,\"logprobs_target\":[-3]}\n";
  }
  const auto r = read_scores_jsonl(dir / "s.jsonl");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(score(r[0], ScoreMetric::ratio), 0.75);
  EXPECT_FALSE(r[1].logprobs_ref.has_value());
  std::ofstream(dir / "bad.jsonl") << "{\"canary_id\":\"a\",\"member\":true,\"logprobs_target\":[0.5]}\n";
  EXPECT_THROW(read_scores_jsonl(dir / "bad.jsonl"), FormatError);
  EXPECT_EQ(orientation_of(ScoreMetric::loss), Orientation::lower_is_member);
  EXPECT_EQ(orientation_of(ScoreMetric::mink), Orientation::higher_is_member);
  EXPECT_EQ(score_metric_from_string("ratio"), ScoreMetric::ratio);
  EXPECT_THROW(score_metric_from_string("zlib"), InvalidArgument);
}

TEST(DistanceRho, MeanLevenshtein) {
  FuzzyDupSet exact;
  exact.ref = {1, 2, 3};
  exact.dups = {exact.ref, exact.ref};
  FuzzyDupSet repl;
  repl.ref = {1, 2, 3, 4};
  repl.dups = {repl.ref, {9, 2, 3, 4}, {9, 9, 3, 4}};
  const std::vector<FuzzyDupSet> sets = {exact, repl};
  const std::vector<RhoResult> results = {{0.9, 10.0, 1.0, 10, false}, {0.8, 5.0, 0.4, 10, false}};
  const auto t = distance_rho_table(sets, results);
  EXPECT_EQ(t[0].mean_levenshtein, 0.0);
  EXPECT_EQ(t[0].rho, 1.0);
  EXPECT_EQ(t[1].mean_levenshtein, 1.5);
  EXPECT_THROW(distance_rho_table(sets, std::span<const RhoResult>(results.data(), 1)), InvalidArgument);
}
