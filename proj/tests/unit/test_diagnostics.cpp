#include <cmath>

#include <gtest/gtest.h>

#include "powerlogit/diagnostics.hpp"

using namespace powerlogit;

TEST(Ess, WhiteNoiseIsNearSampleSize) {
  RngStream rng(1);
  Eigen::VectorXd x(10000);
  for (auto& v : x) v = rng.normal();
  const EssResult e = effective_sample_size(x);
  EXPECT_FALSE(e.degenerate);
  EXPECT_NEAR(e.value, 10000.0, 1000.0);
  EXPECT_LE(e.value, 10000.0);
}

TEST(Ess, ArOneMatchesAnalyticFactor) {
  RngStream rng(2);
  const double rho = 0.5;
  Eigen::VectorXd x(10000);
  double prev = rng.normal() / std::sqrt(1 - rho * rho);
  for (auto& v : x) {
    prev = rho * prev + rng.normal();
    v = prev;
  }
  const double expected = 10000.0 * (1 - rho) / (1 + rho);
  EXPECT_NEAR(effective_sample_size(x).value, expected, 0.1 * expected);
}

TEST(Ess, ConstantSeriesIsDegenerate) {
  const EssResult e = effective_sample_size(Eigen::VectorXd::Constant(50, 3.0));
  EXPECT_TRUE(e.degenerate);
  EXPECT_EQ(e.value, 1.0);
}

TEST(Ess, NeverExceedsLength) {
  // Alternating series has negative lag-1 correlation.
  Eigen::VectorXd x(1000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = (i % 2 ? 1.0 : -1.0) + 1e-3 * static_cast<double>(i % 7);
  EXPECT_LE(effective_sample_size(x).value, 1000.0);
  EXPECT_GT(effective_sample_size(x).value, 0.0);
}

TEST(Ess, ShortSeriesRejected) { EXPECT_THROW(effective_sample_size(Eigen::VectorXd::Ones(5)), UsageError); }

TEST(Ell, CoinFlip) {
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(10, 0.5);
  EXPECT_NEAR(expected_log_likelihood(p, p), -std::log(2.0), 1e-15);
}

TEST(Ell, CertaintyIsZero) {
  const Eigen::VectorXd p = Eigen::VectorXd::Ones(4);
  EXPECT_NEAR(expected_log_likelihood(p, p), 0.0, 1e-11);
  EXPECT_TRUE(std::isfinite(expected_log_likelihood(p, Eigen::VectorXd::Zero(4))));
}

TEST(Ell, MaximizedAtTruth) {
  for (const double p : {0.1, 0.35, 0.5, 0.8}) {
    const Eigen::VectorXd truth = Eigen::VectorXd::Constant(1, p);
    const double best = expected_log_likelihood(truth, truth);
    for (double q = 0.01; q < 1.0; q += 0.01) {
      EXPECT_LE(expected_log_likelihood(truth, Eigen::VectorXd::Constant(1, q)), best + 1e-15);
    }
  }
}

TEST(Miss, TieGoesToPositiveClass) {
  Eigen::VectorXd labels(5);
  labels << 1, -1, -1, 1, -1;
  EXPECT_DOUBLE_EQ(misclassification_rate(labels, Eigen::VectorXd::Constant(5, 0.5)), 0.6);
}

TEST(Miss, PerfectProbabilities) {
  Eigen::VectorXd labels(4);
  labels << 1, -1, 1, 0;
  Eigen::VectorXd p(4);
  p << 1, 0, 0.9, 0.2;
  EXPECT_EQ(misclassification_rate(labels, p), 0.0);
  EXPECT_THROW(misclassification_rate(labels, Eigen::VectorXd::Ones(3)), UsageError);
}

TEST(Predict, PointEstimates) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd ones23 = Eigen::MatrixXd::Ones(2, 3);
  EXPECT_DOUBLE_EQ(predict(zero, ones23)[0], 0.5);
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 0.7);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd wide = Eigen::MatrixXd::Ones(1, 2);
  EXPECT_NEAR(predict(b, one)[0], 1.0 / (1.0 + std::exp(-0.7)), 1e-15);
  EXPECT_THROW(predict(b, wide), UsageError);
}

TEST(Predict, PosteriorAverageInConvexHull) {
  RngStream rng(3);
  Eigen::MatrixXd samples(50, 2);
  for (Eigen::Index i = 0; i < samples.size(); ++i) samples.data()[i] = rng.normal();
  Eigen::MatrixXd x(4, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Eigen::VectorXd avg = predict(samples, x);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double lo = 1.0;
    double hi = 0.0;
    for (Eigen::Index s = 0; s < samples.rows(); ++s) {
      const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(samples.row(s))));
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    EXPECT_GE(avg[i], lo);
    EXPECT_LE(avg[i], hi);
  }
}

TEST(Predict, TraceUsesPostBurnInRows) {
  Trace t;
  t.beta = Eigen::MatrixXd::Zero(20, 1);
  t.beta.topRows(10).setConstant(100.0);
  t.nu = Eigen::VectorXd::Ones(20);
  StageRecord s;
  s.iterations = 20;
  s.burn_in = 10;
  t.stages.push_back(s);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  EXPECT_DOUBLE_EQ(predict(t, one)[0], 0.5);
}
