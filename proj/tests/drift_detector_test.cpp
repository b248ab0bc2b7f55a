#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nadine/drift.hpp"

namespace nadine {
namespace {

AccuracyVector pattern(std::initializer_list<std::pair<std::size_t, std::uint8_t>> runs) {
  AccuracyVector v;
  for (auto [n, bit] : runs) v.insert(v.end(), n, bit);
  return v;
}

DriftConfig literal_config() {
  DriftConfig cfg;
  cfg.cut_rule = CutRule::FirstHit;
  cfg.guard = CutGuard::None;
  cfg.statistic = GapStatistic::PrefixVsSuffix;
  cfg.window_batches = 1;
  return cfg;
}

TEST(HoeffdingEpsilon, ReferenceValue) {
  EXPECT_NEAR(hoeffding_epsilon(50, 1e-4), std::sqrt(std::log(10000.0) / 100.0), 1e-15);
  EXPECT_NEAR(hoeffding_epsilon(50, 1e-4), 0.30349, 1e-5);
}

TEST(HoeffdingEpsilon, UnitAlphaGivesZero) { EXPECT_EQ(hoeffding_epsilon(10, 1.0), 0.0); }

TEST(HoeffdingEpsilon, InverseSqrtScaling) {
  EXPECT_NEAR(hoeffding_epsilon(200, 5e-4), hoeffding_epsilon(50, 5e-4) / 2.0, 1e-15);
}

TEST(HoeffdingEpsilon, MonotoneInNAndAlpha) {
  for (std::size_t n = 1; n < 100; ++n) EXPECT_GT(hoeffding_epsilon(n, 0.01), hoeffding_epsilon(n + 1, 0.01));
  EXPECT_GT(hoeffding_epsilon(10, 1e-6), hoeffding_epsilon(10, 1e-3));
}

TEST(HoeffdingEpsilon, DomainErrors) {
  EXPECT_THROW(hoeffding_epsilon(10, 0.0), DomainError);
  EXPECT_THROW(hoeffding_epsilon(10, 1.5), DomainError);
  EXPECT_THROW(hoeffding_epsilon(0, 0.5), DomainError);
}

TEST(FindCut, AllZerosDependsOnGuard) {
  const AccuracyVector zeros(50, 0);
  // Literal inequality: 0 + eps(50) <= 0 + eps(12) holds at the first candidate.
  EXPECT_EQ(find_cut(zeros, literal_config()), std::optional<std::size_t>(12));
  DriftConfig above = literal_config();
  above.guard = CutGuard::PrefixAbove;
  EXPECT_EQ(find_cut(zeros, above), std::nullopt);
  EXPECT_EQ(find_cut(zeros, DriftConfig{}), std::nullopt);
}

TEST(FindCut, StepVectorEnumeratedInequality) {
  const AccuracyVector step = pattern({{25, 0}, {25, 1}});
  // Independent enumeration of prefix upper bounds at alpha_w = 5e-4.
  const double lnw = std::log(1.0 / 5e-4);
  auto ub = [&](double ones, double n) { return ones / n + std::sqrt(lnw / (2.0 * n)); };
  const double u12 = ub(0, 12), u25 = ub(0, 25), u37 = ub(12, 37), u50 = ub(25, 50);
  ASSERT_LT(u25, u12);
  ASSERT_LT(u25, u37);
  EXPECT_EQ(find_cut(step, DriftConfig{}), std::optional<std::size_t>(25));
  // The literal first-hit rule never qualifies on a rising step.
  ASSERT_GT(u50, u12);
  ASSERT_GT(u50, u25);
  ASSERT_GT(u50, u37);
  EXPECT_EQ(find_cut(step, literal_config()), std::nullopt);
}

TEST(FindCut, TooShortVectorIsPreconditionError) {
  EXPECT_THROW(find_cut(AccuracyVector(3, 0), DriftConfig{}), DomainError);
}

TEST(Assess, AllCorrectIsStable) {
  EXPECT_EQ(assess(AccuracyVector(50, 0), DriftConfig{}).state, DriftState::Stable);
  EXPECT_EQ(assess(AccuracyVector(50, 0), literal_config()).state, DriftState::Stable);
}

TEST(Assess, GapBetweenBoundsIsWarning) {
  const AccuracyVector v = pattern({{25, 0}, {14, 1}, {11, 0}});
  const DriftVerdict verdict = assess(v, DriftConfig{});
  ASSERT_EQ(verdict.cut, std::optional<std::size_t>(25));
  EXPECT_NEAR(verdict.gap, 14.0 / 50.0, 1e-15);
  EXPECT_GE(verdict.gap, verdict.eps_warning);
  EXPECT_LT(verdict.gap, verdict.eps_drift);
  EXPECT_EQ(verdict.state, DriftState::Warning);
  EXPECT_GT(verdict.eps_drift, verdict.eps_warning);
}

TEST(Assess, DriftBoundExceedsWarningBound) {
  DriftConfig cfg;
  for (std::size_t n : {8u, 50u, 150u})
    for (std::size_t c : cut_candidates(n, cfg))
      EXPECT_GT(cut_epsilon(n, c, cfg.alpha_drift), cut_epsilon(n, c, cfg.alpha_warning));
}

TEST(Assess, VerdictMonotoneInGap) {
  DriftConfig cfg;
  for (std::size_t c : {12u, 25u, 37u}) {
    int prev = 0;
    for (double gap = 0.0; gap <= 1.0; gap += 0.001) {
      const int rank = static_cast<int>(classify_gap(gap, 50, c, cfg));
      EXPECT_GE(rank, prev);
      prev = rank;
    }
  }
}

TEST(Assess, StationaryBernoulliNeverDrifts) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution err(0.1);
    DriftDetector det{DriftConfig{}};
    for (int k = 0; k < 100; ++k) {
      AccuracyVector a(50);
      for (auto& b : a) b = err(gen);
      EXPECT_NE(det.observe(a).state, DriftState::Drift) << "seed " << seed << " batch " << k;
    }
  }
}

TEST(Assess, MidBatchStepDetectedWithinNextBatch) {
  // Deterministic 10% / 60% patterns; the step falls at sample 25 of batch 2.
  auto tenth = [](std::size_t i) -> std::uint8_t { return i % 10 == 0; };
  auto sixty = [](std::size_t i) -> std::uint8_t { return i % 5 < 3; };
  DriftDetector det{DriftConfig{}};
  for (int k = 0; k < 2; ++k) {
    AccuracyVector a(50);
    for (std::size_t i = 0; i < 50; ++i) a[i] = tenth(i);
    ASSERT_EQ(det.observe(a).state, DriftState::Stable);
  }
  AccuracyVector mixed(50), high(50);
  for (std::size_t i = 0; i < 50; ++i) {
    mixed[i] = i < 25 ? tenth(i) : sixty(i);
    high[i] = sixty(i);
  }
  const auto first = det.observe(mixed);
  const auto second = first.state == DriftState::Drift ? first : det.observe(high);
  EXPECT_EQ(second.state, DriftState::Drift);
}

TEST(Assess, PureFunctionOfInput) {
  const AccuracyVector v = pattern({{20, 0}, {30, 1}});
  const auto a = assess(v, DriftConfig{});
  const auto b = assess(v, DriftConfig{});
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(a.cut, b.cut);
  EXPECT_EQ(a.gap, b.gap);
}

TEST(DriftConfigValidation, RejectsInvertedAlphas) {
  DriftConfig cfg;
  cfg.alpha_drift = 0.001;
  cfg.alpha_warning = 0.0005;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = DriftConfig{};
  cfg.cut_fractions = {0.0, 0.5};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(WarningBufferTest, WarningWarningDriftReplaysTwoBatches) {
  WarningBuffer<int> buf;
  EXPECT_TRUE(buf.update(DriftState::Warning, 1).empty());
  EXPECT_TRUE(buf.update(DriftState::Warning, 2).empty());
  const auto replay = buf.update(DriftState::Drift, 3);
  EXPECT_EQ(replay, (std::vector<int>{1, 2}));
  EXPECT_EQ(buf.size(), 0u);
}

TEST(WarningBufferTest, StableClears) {
  WarningBuffer<int> buf;
  buf.update(DriftState::Warning, 1);
  buf.update(DriftState::Stable, 2);
  EXPECT_EQ(buf.size(), 0u);
}

TEST(WarningBufferTest, DriftWithEmptyBufferReplaysNothing) {
  WarningBuffer<int> buf;
  EXPECT_TRUE(buf.update(DriftState::Drift, 1).empty());
}

}  // namespace
}  // namespace nadine
