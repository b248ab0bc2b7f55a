#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "nadine/memory.hpp"

namespace nadine {
namespace {

double boost_quantile(double dof, double alpha) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), alpha);
}

TEST(Chi2Inverse, TabulatedValues) {
  EXPECT_NEAR(chi2_inverse(1, 0.99), 6.634896601021214, 1e-8);
  EXPECT_NEAR(chi2_inverse(2, 0.99), -2.0 * std::log(0.01), 1e-8);
  EXPECT_NEAR(chi2_inverse(2, 0.5), 2.0 * std::log(2.0), 1e-8);
}

TEST(Chi2Inverse, AgreesWithBoostAcrossGrid) {
  for (std::size_t u : {1u, 2u, 3u, 5u, 10u, 20u, 36u, 84u, 200u}) {
    for (double a : {0.001, 0.05, 0.5, 0.9, 0.99, 0.999}) {
      EXPECT_NEAR(chi2_inverse(u, a), boost_quantile(static_cast<double>(u), a), 1e-8) << "u=" << u << " a=" << a;
    }
  }
}

TEST(Chi2Inverse, IncompleteGammaAgreesWithBoost) {
  for (double a : {0.5, 1.0, 2.5, 10.0, 42.0}) {
    for (double x : {0.01, 0.7, 3.0, 11.0, 60.0}) {
      EXPECT_NEAR(regularized_gamma_p(a, x), boost::math::gamma_p(a, x), 1e-13);
    }
  }
}

TEST(Chi2Inverse, StrictlyIncreasing) {
  double prev = 0.0;
  for (double a = 0.05; a < 0.999; a += 0.05) {
    const double q = chi2_inverse(4, a);
    EXPECT_GT(q, prev);
    prev = q;
  }
  prev = 0.0;
  for (std::size_t u = 1; u < 30; ++u) {
    const double q = chi2_inverse(u, 0.99);
    EXPECT_GT(q, prev);
    prev = q;
  }
}

TEST(Chi2Inverse, DomainErrors) {
  EXPECT_THROW(chi2_inverse(2, 0.0), DomainError);
  EXPECT_THROW(chi2_inverse(2, 1.0), DomainError);
  EXPECT_THROW(chi2_inverse(0, 0.5), DomainError);
}

GaussianEnvelope fitted_envelope(std::size_t dim, std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  GaussianEnvelope env(dim);
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = g(gen);
    env.update(x);
  }
  return env;
}

TEST(EdgeTest, CenterIsNotAnEdge) {
  const auto env = fitted_envelope(3, 200, 1);
  const std::vector<double> c(env.center().data(), env.center().data() + 3);
  EXPECT_EQ(env.mahalanobis2(c), 0.0);
  EXPECT_FALSE(edge_test(env, c));
}

TEST(EdgeTest, FarOutlierIsExcluded) {
  const auto env = fitted_envelope(2, 500, 2);
  const std::vector<double> far{1000.0, -1000.0};
  EXPECT_GT(env.mahalanobis2(far), 1e5);
  EXPECT_FALSE(edge_test(env, far));
}

TEST(EdgeTest, WarmingEnvelopeNeverAdmits) {
  GaussianEnvelope env(3);
  const std::vector<double> x{5.0, 5.0, 5.0};
  for (int i = 0; i < 3; ++i) {
    EXPECT_FALSE(edge_test(env, x));
    env.update(std::vector<double>{double(i), double(i * i), 1.0 - i});
  }
}

TEST(EdgeTest, StandardNormalBandFraction) {
  // P(q_0.99 <= chi2_2 <= q_0.999) = 0.009
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g;
  GaussianEnvelope env(2);
  std::vector<double> x(2);
  for (int i = 0; i < 2000; ++i) {
    x = {g(gen), g(gen)};
    env.update(x);
  }
  const EdgeThresholds band(2, EdgeBand{});
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    x = {g(gen), g(gen)};
    if (band.contains(env.mahalanobis2(x))) ++hits;
    env.update(x);
  }
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.009, 0.003);
}

TEST(Envelope, IncrementalMatchesBatchCovariance) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  const std::size_t dim = 5, n = 2500;
  std::vector<std::vector<double>> rows(n, std::vector<double>(dim));
  GaussianEnvelope env(dim);
  for (auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) r[j] = u(gen) * (1.0 + j) + (j ? r[j - 1] : 0.0);
    env.update(r);
  }
  std::vector<double> mean(dim, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < dim; ++j) mean[j] += r[j] / n;
  for (std::size_t a = 0; a < dim; ++a) {
    EXPECT_NEAR(env.center()[a], mean[a], 1e-10);
    for (std::size_t b = 0; b < dim; ++b) {
      double s = 0.0;
      for (const auto& r : rows) s += (r[a] - mean[a]) * (r[b] - mean[b]);
      EXPECT_NEAR(env.covariance()(a, b), s / (n - 1), 1e-8);
    }
  }
  EXPECT_LT(env.inverse_residual(), 1e-8);
}

TEST(Envelope, RankOneInverseStaysConsistentBetweenReinversions) {
  auto env = fitted_envelope(4, 999, 5);
  EXPECT_LT(env.inverse_residual(), 1e-8);
  const std::vector<double> probe{0.3, -1.2, 0.8, 2.0};
  const double before = env.mahalanobis2(probe);
  env.reinvert();  // picks a fresh ridge, so agreement is only up to the ridge change
  EXPECT_LT(env.inverse_residual(), 1e-8);
  EXPECT_NEAR(env.mahalanobis2(probe), before, 1e-5 * before);
}

TEST(EnvelopeDegenerate, SingularCovarianceIsRegularized) {
  GaussianEnvelope env(3);
  for (int i = 0; i < 50; ++i) env.update(std::vector<double>{double(i), 2.0 * i, 0.0});
  EXPECT_TRUE(env.fitted());
  EXPECT_TRUE(std::isfinite(env.mahalanobis2(std::vector<double>{1.0, 1.0, 1.0})));
}

TEST(HardTest, RatioRule) {
  EXPECT_TRUE(hard_test(std::vector<double>{0.5, 0.45, 0.05}));
  EXPECT_FALSE(hard_test(std::vector<double>{0.9, 0.05, 0.05}));
  EXPECT_TRUE(hard_test(std::vector<double>{0.4, 0.4, 0.2}));
  EXPECT_NEAR(0.5 / 0.95, 0.5263, 1e-4);
}

TEST(UpdateAndAdmit, NothingAdmittedWhileWarming) {
  AdaptiveMemory mem(3, 10);
  for (std::size_t i = 0; i < 4; ++i) {
    // maximally uncertain prediction would be Hard once warmed up
    EXPECT_FALSE(mem.update_and_admit(std::vector<double>{double(i), 1.0 - i, 0.5 * i}, std::vector<double>{0.5, 0.5},
                                      0, 0));
  }
  EXPECT_TRUE(mem.store().empty());
  EXPECT_TRUE(mem.update_and_admit(std::vector<double>{0.0, 0.0, 0.0}, std::vector<double>{0.5, 0.5}, 0, 0));
}

TEST(UpdateAndAdmit, OverlappingClassesYieldHardEntries) {
  // Two 1-D Gaussians at -0.25 and +0.25 (sd 1): the Bayes posterior is
  // close to 0.5 for most samples, so hard admissions dominate.
  std::mt19937_64 gen(6);
  std::normal_distribution<double> g;
  AdaptiveMemory mem(2, 500);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t label = i % 2;
    const double mu = label ? 0.25 : -0.25;
    const std::vector<double> x{mu + g(gen), g(gen)};
    const double l1 = std::exp(-0.5 * (x[0] - 0.25) * (x[0] - 0.25));
    const double l0 = std::exp(-0.5 * (x[0] + 0.25) * (x[0] + 0.25));
    mem.update_and_admit(x, std::vector<double>{l0 / (l0 + l1), l1 / (l0 + l1)}, label, 0);
  }
  EXPECT_GT(mem.store().count(AdmissionReason::Hard), 0u);
}

TEST(UpdateAndAdmit, CapacityEvictsOldest) {
  MemoryStore store(3);
  for (std::size_t i = 0; i < 5; ++i) store.push(MemoryEntry{{double(i)}, i, AdmissionReason::Hard, i});
  ASSERT_EQ(store.size(), 3u);
  EXPECT_EQ(store.entries().front().label, 2u);
  EXPECT_EQ(store.entries().back().label, 4u);
}

}  // namespace
}  // namespace nadine
