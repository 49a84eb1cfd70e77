#pragma once

// Test-only reference computations. Nothing here calls into the sampler's
// own numerics beyond plain data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Negative log of the unnormalized power posterior with a Laplace prior of
/// rate kappa / (nu sigma_j) on every coordinate flagged as penalized.
inline double neg_log_posterior(const Eigen::MatrixXd& yX, const Eigen::VectorXd& mult, const Eigen::VectorXd& beta,
                                double kappa, double nu, const std::vector<bool>& penalized) {
  const Eigen::VectorXd eta = yX * beta;
  double v = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) v += kappa * mult[i] * log1pexp(-eta[i]);
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (penalized[static_cast<std::size_t>(j)]) v += kappa * std::abs(beta[j]) / nu;
  }
  return v;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Posterior mean / sd on a dense tensor grid (p = 1 or 2) centred on `centre`
/// with half-width `width` per coordinate.
inline Moments grid_moments(const std::function<double(const Eigen::VectorXd&)>& neg_log, const Eigen::VectorXd& centre,
                            const Eigen::VectorXd& width, int points) {
  const Eigen::Index p = centre.size();
  std::vector<Eigen::VectorXd> nodes;
  const double step = 2.0 / (points - 1);
  if (p == 1) {
    for (int i = 0; i < points; ++i) nodes.push_back(Eigen::VectorXd::Constant(1, centre[0] + width[0] * (-1 + i * step)));
  } else {
    for (int i = 0; i < points; ++i) {
      for (int k = 0; k < points; ++k) {
        Eigen::VectorXd b(2);
        b << centre[0] + width[0] * (-1 + i * step), centre[1] + width[1] * (-1 + k * step);
        nodes.push_back(b);
      }
    }
  }
  std::vector<double> logw(nodes.size());
  double top = -1e300;
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    logw[s] = -neg_log(nodes[s]);
    top = std::max(top, logw[s]);
  }
  double total = 0.0;
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(p);
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    const double w = std::exp(logw[s] - top);
    total += w;
    m1 += w * nodes[s];
    m2 += w * nodes[s].cwiseProduct(nodes[s]);
  }
  m1 /= total;
  m2 /= total;
  return {m1, (m2 - m1.cwiseProduct(m1)).cwiseSqrt()};
}

/// Newton / IRLS maximum likelihood for sum_i mult_i log(1 + exp(-yX_i beta)).
inline Eigen::VectorXd irls(const Eigen::MatrixXd& yX, const Eigen::VectorXd& mult, int max_iter = 100) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(yX.cols());
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = yX * beta;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(beta.size());
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(beta.size(), beta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(eta[i]));  // sigmoid(-eta)
      grad += mult[i] * s * yX.row(i).transpose();
      hess += mult[i] * s * (1.0 - s) * yX.row(i).transpose() * yX.row(i);
    }
    const Eigen::VectorXd delta = hess.ldlt().solve(grad);
    beta += delta;
    if (delta.lpNorm<Eigen::Infinity>() < 1e-13 * (1.0 + beta.lpNorm<Eigen::Infinity>())) break;
  }
  return beta;
}

/// Proximal gradient for sum_i log(1 + exp(-yX_i beta)) + penalty * sum_{j in pen} |beta_j|.
inline Eigen::VectorXd lasso_logistic(const Eigen::MatrixXd& yX, double penalty, const std::vector<bool>& penalized,
                                      int iterations = 200000) {
  const double lipschitz = 0.25 * yX.squaredNorm();
  const double t = 1.0 / lipschitz;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(yX.cols());
  Eigen::VectorXd prev = beta;
  for (int it = 0; it < iterations; ++it) {
    // FISTA momentum
    const Eigen::VectorXd v = beta + (it / (it + 3.0)) * (beta - prev);
    const Eigen::VectorXd eta = yX * v;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(beta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) grad -= yX.row(i).transpose() / (1.0 + std::exp(eta[i]));
    Eigen::VectorXd next = v - t * grad;
    for (Eigen::Index j = 0; j < next.size(); ++j) {
      if (!penalized[static_cast<std::size_t>(j)]) continue;
      const double m = std::abs(next[j]) - t * penalty;
      next[j] = m > 0 ? std::copysign(m, next[j]) : 0.0;
    }
    prev = beta;
    beta = next;
    if (it > 100 && (beta - prev).lpNorm<Eigen::Infinity>() < 1e-14) break;
  }
  return beta;
}

/// One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double statistic;
  double p_value;
};

inline KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k < 200; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return {d, std::clamp(p, 0.0, 1.0)};
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Laplace(0, scale) cdf.
inline double laplace_cdf(double x, double scale) {
  return x < 0 ? 0.5 * std::exp(x / scale) : 1.0 - 0.5 * std::exp(-x / scale);
}

/// Inverse Gaussian(mu, lambda) cdf.
inline double inverse_gaussian_cdf(double x, double mu, double lam) {
  if (x <= 0) return 0.0;
  const double r = std::sqrt(lam / x);
  return normal_cdf(r * (x / mu - 1.0)) + std::exp(2.0 * lam / mu) * normal_cdf(-r * (x / mu + 1.0));
}

/// Mean and variance of N(m, v) truncated to (0, inf).
inline std::pair<double, double> truncated_normal_moments(double m, double v) {
  const double s = std::sqrt(v);
  const double alpha = -m / s;
  const double z = normal_cdf(-alpha);
  const double ratio = normal_pdf(alpha) / z;
  const double mean = m + s * ratio;
  const double var = v * (1.0 + alpha * ratio - ratio * ratio);
  return {mean, var};
}

/// Brute-force partial sum of 2 / ((a + k)(b + k)) plus an integral tail.
inline double polya_mean(double a, double b, long terms = 2000000) {
  double s = 0.0;
  for (long k = terms - 1; k >= 0; --k) s += 2.0 / ((a + k) * (b + k));
  // integral of 2/((a+x)(b+x)) from terms - 1/2 to infinity (midpoint rule tail)
  const double t = terms - 0.5;
  s += std::abs(a - b) < 1e-12 ? 2.0 / (a + t) : 2.0 * std::log((b + t) / (a + t)) / (b - a);
  return s;
}

/// Variance of the Polya law: sum of squared exponential scales.
inline double polya_variance(double a, double b, long terms = 200000) {
  double s = 0.0;
  for (long k = terms - 1; k >= 0; --k) {
    const double c = 2.0 / ((a + k) * (b + k));
    s += c * c;
  }
  return s;
}

/// Logistic MLE-friendly synthetic design: rows of N(0, 1) with an intercept column.
template <class Rng>
inline Eigen::MatrixXd gaussian_design(Eigen::Index n, Eigen::Index p, Rng& rng, bool intercept) {
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = (intercept && j == 0) ? 1.0 : rng.normal();
  }
  return x;
}

/// Standard error of a mean from batch means.
inline double batch_se(const Eigen::VectorXd& x, int batches = 20) {
  const Eigen::Index len = x.size() / batches;
  Eigen::VectorXd means(batches);
  for (int b = 0; b < batches; ++b) means[b] = x.segment(b * len, len).mean();
  const double m = means.mean();
  return std::sqrt((means.array() - m).square().sum() / (batches - 1) / batches);
}

}  // namespace oracle
