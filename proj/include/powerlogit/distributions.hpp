#pragma once

// Variate generators and densities used by the Gibbs sampler: Polya mixing
// variables, positive truncated normals, inverse Gaussian / GIG(1/2) and
// inverse gamma draws, and the z-distribution density.

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "powerlogit/errors.hpp"
#include "powerlogit/math.hpp"
#include "powerlogit/rng.hpp"

namespace powerlogit {

/// Parameters of the Polya mixing law q_{a,b}: the distribution of
/// sum_k 2 e_k / ((a+k)(b+k)) with e_k iid unit exponential.
struct PolyaParams {
  double a = 1.0;
  double b = 1.0;
  int terms = 100;  // K, number of explicit exponential terms
  // Add the exact mean of the omitted terms k >= K. Their variance is
  // O(K^-3) and is dropped.
  bool tail_correction = true;
};

namespace detail {

inline void validate(const PolyaParams& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0)) {
    throw ImproperMixingError("Polya mixing density requires a > 0 and b > 0 (got a=" +
                              std::to_string(p.a) + ", b=" + std::to_string(p.b) + ")");
  }
  if (p.terms < 1) throw DomainError("Polya truncation must keep at least one term");
}

}  // namespace detail

/// sum_{k >= first} 2 / ((a+k)(b+k)).
inline double polya_series_mean(double a, double b, int first = 0) {
  const double ak = a + first;
  const double bk = b + first;
  if (std::abs(a - b) < 1e-6 * (1.0 + std::abs(a))) {
    return 2.0 * boost::math::trigamma(0.5 * (ak + bk));
  }
  return 2.0 * (boost::math::digamma(bk) - boost::math::digamma(ak)) / (b - a);
}

/// Expected value of a draw from `sample_polya` with these parameters.
inline double polya_mean(const PolyaParams& p) {
  detail::validate(p);
  if (p.tail_correction) return polya_series_mean(p.a, p.b);
  return polya_series_mean(p.a, p.b) - polya_series_mean(p.a, p.b, p.terms);
}

/// Precomputed Polya generator; the per-draw cost is `terms` exponentials.
class PolyaSampler {
 public:
  PolyaSampler() : PolyaSampler(PolyaParams{}) {}

  explicit PolyaSampler(const PolyaParams& params) : params_(params) {
    detail::validate(params);
    weights_.resize(static_cast<std::size_t>(params.terms));
    for (int k = 0; k < params.terms; ++k) {
      weights_[static_cast<std::size_t>(k)] = 2.0 / ((params.a + k) * (params.b + k));
    }
    tail_ = params.tail_correction ? polya_series_mean(params.a, params.b, params.terms) : 0.0;
  }

  const PolyaParams& params() const noexcept { return params_; }

  double operator()(RngStream& rng) const {
    double sum = tail_;
    for (const double w : weights_) sum += w * rng.exponential();
    return sum;
  }

  /// Draw from caller-supplied exponentials (one per term). Used for
  /// coupling checks.
  template <class Range>
  double from_exponentials(const Range& eps) const {
    double sum = tail_;
    std::size_t k = 0;
    for (const double e : eps) {
      if (k == weights_.size()) break;
      sum += weights_[k++] * e;
    }
    return sum;
  }

 private:
  PolyaParams params_;
  std::vector<double> weights_;
  double tail_ = 0.0;
};

inline double sample_polya(const PolyaParams& params, RngStream& rng) {
  return PolyaSampler(params)(rng);
}

/// N(mean, variance) conditioned on (0, inf).
inline double sample_truncated_normal_positive(double mean, double variance, RngStream& rng) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw DomainError("truncated normal variance must be positive");
  }
  const double sd = std::sqrt(variance);
  const double lower = -mean / sd;  // standardized truncation point
  if (lower > 0.5) {
    // Robert (1995) translated-exponential proposal.
    const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
    for (;;) {
      const double x = lower + rng.exponential() / rate;
      const double d = x - rate;
      if (std::log(rng.uniform()) <= -0.5 * d * d) return mean + sd * x;
    }
  }
  for (;;) {
    const double x = rng.normal();
    if (x > lower) return mean + sd * x;
  }
}

/// Inverse Gaussian with mean `mu` and shape `lam` (Michael, Schucany & Haas).
inline double sample_inverse_gaussian(double mu, double lam, RngStream& rng) {
  if (!(mu > 0.0) || !(lam > 0.0)) throw DomainError("inverse Gaussian parameters must be positive");
  const double n = rng.normal();
  const double y = n * n;
  if (y == 0.0) return mu;
  // Root of the MSH quadratic written to avoid cancellation when mu >> lam.
  const double root = y + std::sqrt(y * y + 4.0 * lam * y / mu);
  const double x = 4.0 * lam * y / (root * root);
  if (rng.uniform() * (mu + x) <= mu) return x;
  return mu * (mu / x);
}

/// GIG(1/2, chi, psi), realized as the reciprocal of an inverse Gaussian.
inline double sample_gig_half(double chi, double psi, RngStream& rng) {
  if (!(chi > 0.0) || !(psi > 0.0)) throw DomainError("GIG parameters must be positive");
  return 1.0 / sample_inverse_gaussian(std::sqrt(psi / chi), psi, rng);
}

/// Inverse gamma with density proportional to x^{-shape-1} exp(-scale/x).
inline double sample_inverse_gamma(double shape, double scale, RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw DomainError("inverse gamma parameters must be positive");
  return scale / rng.gamma(shape);
}

/// log of the z-distribution density Z(z; a, b, sigma, mu).
inline double z_log_pdf(double z, double a, double b, double sigma, double mu) {
  if (!(a > 0.0) || !(b > 0.0) || !(sigma > 0.0)) throw DomainError("z density needs a, b, sigma > 0");
  const double t = (z - mu) / sigma;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  return -std::log(sigma) - log_beta + a * t - (a + b) * math::log1pexp(t);
}

inline double z_pdf(double z, double a, double b, double sigma, double mu) {
  return std::exp(z_log_pdf(z, a, b, sigma, mu));
}

/// F_Z(0) for Z(1, kappa, 1, mu): 1 - (1 + e^{-mu})^{-kappa}.
inline double z_cdf_at_zero(double kappa, double mu) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  return -std::expm1(-kappa * math::log1pexp(-mu));
}

}  // namespace powerlogit
