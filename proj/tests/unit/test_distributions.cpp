#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "powerlogit/distributions.hpp"
#include "powerlogit/math.hpp"
#include "powerlogit/rng.hpp"

using namespace powerlogit;

namespace {

struct Sample {
  double mean;
  double var;
  double se;
};

template <class F>
Sample draw_many(int n, F&& f) {
  double s = 0.0;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = f();
    s += x;
    s2 += x * x;
  }
  const double m = s / n;
  const double v = (s2 - n * m * m) / (n - 1);
  return {m, v, std::sqrt(v / n)};
}

}  // namespace

TEST(Rng, SameSeedAndStreamReproduce) {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsDiffer) {
  RngStream a(42, 7);
  RngStream b(42, 8);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a() == b() ? 1 : 0;
  EXPECT_EQ(same, 0);
}

TEST(Rng, SubstreamIgnoresParentPosition) {
  RngStream a(3);
  const RngStream child1 = a.substream(5);
  for (int i = 0; i < 17; ++i) a();
  RngStream child2 = a.substream(5);
  RngStream c1 = child1;
  for (int i = 0; i < 50; ++i) ASSERT_EQ(c1(), child2());
}

TEST(Rng, UniformIsOpenInterval) {
  RngStream r(9);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Polya, UnitShapesMeanIsPiSquaredOverThree) {
  RngStream rng(1);
  const PolyaSampler q(PolyaParams{1.0, 1.0, 10000, false});
  const auto s = draw_many(100000, [&] { return q(rng); });
  const double target = std::numbers::pi * std::numbers::pi / 3.0;
  EXPECT_NEAR(s.mean, target, 3.0 * s.se + 2.0 / 10000);
}

TEST(Polya, HalfShapesMeanIsPiSquared) {
  RngStream rng(2);
  const PolyaSampler q(PolyaParams{0.5, 0.5, 10000, false});
  const auto s = draw_many(100000, [&] { return q(rng); });
  EXPECT_NEAR(s.mean, std::numbers::pi * std::numbers::pi, 3.0 * s.se + 2.0 / 10000);
}

TEST(Polya, ImproperShapesThrow) {
  RngStream rng(3);
  EXPECT_THROW(sample_polya(PolyaParams{0.0, 5.0}, rng), ImproperMixingError);
  EXPECT_THROW(sample_polya(PolyaParams{1.0, -1.0}, rng), ImproperMixingError);
  EXPECT_THROW(PolyaSampler(PolyaParams{1.0, 1.0, 0}), DomainError);
}

TEST(Polya, TruncatedMeanMatchesPartialSum) {
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{1, 1}, {0.5, 4.5}, {1, 7}, {2.5, 0.7}}) {
    const int k = 10000;
    RngStream rng(static_cast<std::uint64_t>(a * 100 + b));
    const PolyaSampler q(PolyaParams{a, b, k, false});
    const auto s = draw_many(100000, [&] { return q(rng); });
    double partial = 0.0;
    for (int j = 0; j < k; ++j) partial += 2.0 / ((a + j) * (b + j));
    EXPECT_NEAR(s.mean, partial, 3.0 * s.se) << "a=" << a << " b=" << b;
  }
}

TEST(Polya, SeriesMeanMatchesBruteForce) {
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{1, 1}, {0.5, 0.5}, {1, 20}, {0.5, 19.5}, {3, 3.0000001}}) {
    EXPECT_NEAR(polya_series_mean(a, b), oracle::polya_mean(a, b), 1e-9) << a << "," << b;
  }
}

TEST(Polya, TailCorrectionRestoresFullMean) {
  RngStream rng(4);
  const PolyaParams params{1.0, 20.0, 100, true};
  const PolyaSampler q(params);
  const auto s = draw_many(100000, [&] { return q(rng); });
  EXPECT_NEAR(s.mean, oracle::polya_mean(1.0, 20.0), 3.0 * s.se);
  EXPECT_NEAR(polya_mean(params), oracle::polya_mean(1.0, 20.0), 1e-9);
}

TEST(Polya, VarianceMatchesSumOfSquaredScales) {
  RngStream rng(5);
  const PolyaSampler q(PolyaParams{1.0, 1.0, 2000, false});
  const auto s = draw_many(200000, [&] { return q(rng); });
  const double v = oracle::polya_variance(1.0, 1.0, 2000);
  // Var of the sample variance for this law is modest; 5% is many SEs wide.
  EXPECT_NEAR(s.var, v, 0.05 * v);
}

TEST(Polya, MonotoneInEachExponential) {
  const PolyaSampler q(PolyaParams{0.5, 2.5, 50, true});
  RngStream rng(6);
  std::vector<double> eps(50);
  for (auto& e : eps) e = rng.exponential();
  const double base = q.from_exponentials(eps);
  for (std::size_t k = 0; k < eps.size(); ++k) {
    auto bumped = eps;
    bumped[k] += 0.3;
    EXPECT_GE(q.from_exponentials(bumped), base);
  }
}

TEST(Polya, PositiveDraws) {
  RngStream rng(7);
  const PolyaSampler q(PolyaParams{0.5, 0.5, 100, false});
  for (int i = 0; i < 10000; ++i) ASSERT_GT(q(rng), 0.0);
}

TEST(TheoremOne, WeightAverageReproducesPoweredLogistic) {
  for (const double kappa : {1.0, 2.0, 5.0}) {
    const PolyaSampler q(PolyaParams{1.0, kappa, 100, true});
    for (const double eta : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      RngStream rng(static_cast<std::uint64_t>(100 * kappa + eta + 10));
      double total = 0.0;
      const int n = 100000;
      for (int i = 0; i < n; ++i) {
        const double lam = q(rng);
        total += oracle::normal_cdf((eta + 0.5 * (1.0 - kappa) * lam) / std::sqrt(lam));
      }
      const double target = std::pow(1.0 + std::exp(-eta), -kappa);
      EXPECT_NEAR(total / n, target, 0.01 * target) << "eta=" << eta << " kappa=" << kappa;
    }
  }
}

TEST(TruncatedNormal, AlwaysPositive) {
  RngStream rng(8);
  for (const double m : {-30.0, -3.0, 0.0, 2.0, 40.0}) {
    for (int i = 0; i < 2000; ++i) ASSERT_GT(sample_truncated_normal_positive(m, 1.0, rng), 0.0);
  }
}

TEST(TruncatedNormal, HalfNormalMean) {
  RngStream rng(9);
  const auto s = draw_many(100000, [&] { return sample_truncated_normal_positive(0.0, 1.0, rng); });
  EXPECT_NEAR(s.mean, std::sqrt(2.0 / std::numbers::pi), 3.0 * s.se);
}

TEST(TruncatedNormal, FarAboveZeroIsUntruncated) {
  RngStream rng(10);
  const auto s = draw_many(100000, [&] { return sample_truncated_normal_positive(50.0, 1.0, rng); });
  EXPECT_NEAR(s.mean, 50.0, 3.0 * s.se);
}

TEST(TruncatedNormal, MomentsOnGrid) {
  RngStream rng(11);
  for (const double m : {-6.0, -1.5, -0.2, 0.7, 3.0}) {
    for (const double v : {0.25, 1.0, 9.0}) {
      const auto s = draw_many(100000, [&] { return sample_truncated_normal_positive(m, v, rng); });
      const auto [em, ev] = oracle::truncated_normal_moments(m, v);
      EXPECT_NEAR(s.mean, em, 3.5 * s.se) << m << " " << v;
      EXPECT_NEAR(s.var, ev, 0.03 * ev) << m << " " << v;
    }
  }
}

TEST(TruncatedNormal, NonpositiveVarianceThrows) {
  RngStream rng(12);
  EXPECT_THROW(sample_truncated_normal_positive(0.0, 0.0, rng), DomainError);
  EXPECT_THROW(sample_truncated_normal_positive(0.0, -1.0, rng), DomainError);
}

TEST(InverseGaussian, UnitMoments) {
  RngStream rng(13);
  const auto s = draw_many(100000, [&] { return sample_inverse_gaussian(1.0, 1.0, rng); });
  EXPECT_NEAR(s.mean, 1.0, 3.0 * s.se);
  EXPECT_NEAR(s.var, 1.0, 0.05);
}

TEST(InverseGaussian, QuarterMeanMoments) {
  RngStream rng(14);
  const auto s = draw_many(100000, [&] { return sample_inverse_gaussian(0.25, 1.0, rng); });
  EXPECT_NEAR(s.mean, 0.25, 3.0 * s.se);
  EXPECT_NEAR(s.var, 0.015625, 0.05 * 0.015625);
}

TEST(InverseGaussian, MatchesCdf) {
  for (const auto& [mu, lam] : std::vector<std::pair<double, double>>{{1, 1}, {0.1, 2}, {50, 1}, {1e4, 1}}) {
    RngStream rng(static_cast<std::uint64_t>(mu * 7 + lam));
    std::vector<double> xs(20000);
    for (auto& x : xs) x = sample_inverse_gaussian(mu, lam, rng);
    const auto ks = oracle::ks_test(xs, [&](double x) { return oracle::inverse_gaussian_cdf(x, mu, lam); });
    EXPECT_GT(ks.p_value, 0.001) << "mu=" << mu << " lam=" << lam;
  }
}

TEST(InverseGaussian, PositiveAndValidated) {
  RngStream rng(15);
  for (int i = 0; i < 10000; ++i) ASSERT_GT(sample_inverse_gaussian(1e6, 1.0, rng), 0.0);
  EXPECT_THROW(sample_inverse_gaussian(0.0, 1.0, rng), DomainError);
  EXPECT_THROW(sample_inverse_gaussian(1.0, -1.0, rng), DomainError);
}

TEST(Gig, ReciprocalMeans) {
  RngStream rng(16);
  const auto unit = draw_many(100000, [&] { return 1.0 / sample_gig_half(1.0, 1.0, rng); });
  EXPECT_NEAR(unit.mean, 1.0, 3.0 * unit.se);
  const auto half = draw_many(100000, [&] { return 1.0 / sample_gig_half(4.0, 1.0, rng); });
  EXPECT_NEAR(half.mean, 0.5, 3.0 * half.se);
  EXPECT_THROW(sample_gig_half(0.0, 1.0, rng), DomainError);
}

TEST(InverseGamma, Mean) {
  RngStream rng(17);
  const auto s = draw_many(100000, [&] { return sample_inverse_gamma(4.0, 2.1, rng); });
  EXPECT_NEAR(s.mean, 0.7, 3.0 * s.se);
}

TEST(ZDensity, LogisticAtZero) { EXPECT_NEAR(z_pdf(0.0, 1.0, 1.0, 1.0, 0.0), 0.25, 1e-15); }

TEST(ZDensity, IntegratesToOne) {
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{{1, 1}, {0.5, 3.5}, {2, 0.7}}) {
    double total = 0.0;
    const double h = 1e-3;
    for (double z = -80.0; z < 80.0; z += h) total += z_pdf(z + 0.5 * h, a, b, 1.3, 0.4) * h;
    EXPECT_NEAR(total, 1.0, 1e-6) << a << " " << b;
  }
}

TEST(ZDensity, SymmetricWhenShapesEqual) {
  for (const double z : {0.3, 1.7, 5.0}) {
    EXPECT_NEAR(z_pdf(z, 2.0, 2.0, 1.0, 0.0), z_pdf(-z, 2.0, 2.0, 1.0, 0.0), 1e-15);
  }
}

TEST(ZDensity, CdfAtZeroClosedForm) {
  EXPECT_NEAR(z_cdf_at_zero(1.0, 0.0), 0.5, 1e-15);
  EXPECT_NEAR(z_cdf_at_zero(2.0, 1.0), 1.0 - std::pow(1.0 + std::exp(-1.0), -2.0), 1e-15);
  EXPECT_NEAR(z_cdf_at_zero(2.0, 1.0), 0.46555, 1e-5);
  EXPECT_NEAR(z_cdf_at_zero(2.0, 0.0), 0.75, 1e-15);
}

TEST(ZDensity, LowerIntegralMatchesCdfAtZero) {
  for (const double kappa : {1.0, 2.0, 5.0}) {
    for (const double mu : {-2.0, 0.0, 1.5}) {
      double total = 0.0;
      const double h = 1e-4;
      for (double z = -60.0; z < 0.0; z += h) total += z_pdf(z + 0.5 * h, 1.0, kappa, 1.0, mu) * h;
      EXPECT_NEAR(total, z_cdf_at_zero(kappa, mu), 1e-6) << kappa << " " << mu;
    }
  }
}

TEST(NormalLogCdf, AgreesWithDirectFormAndExtendsIntoTail) {
  for (const double x : {-15.0, -5.0, -1.0, 0.0, 2.0, 8.0}) {
    EXPECT_NEAR(math::norm_log_cdf(x), std::log(oracle::normal_cdf(x)), 1e-10 * (1.0 + std::abs(std::log(oracle::normal_cdf(x)))));
  }
  // log Phi(x) ~ -x^2/2 - log(-x) - log sqrt(2 pi) for x -> -inf
  const double x = -60.0;
  EXPECT_NEAR(math::norm_log_cdf(x), -0.5 * x * x - std::log(-x) - 0.5 * std::log(2 * std::numbers::pi), 1e-3);
  EXPECT_TRUE(std::isfinite(math::norm_log_cdf(-1e4)));
}
