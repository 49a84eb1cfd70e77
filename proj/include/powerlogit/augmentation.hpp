#pragma once

// Latent variables of the powered logistic likelihood. Each observation with
// linear predictor eta = y x'beta and multiplicity kappa carries a Polya
// scale lambda and, in the cdf representation, a positive latent z.
//
// Marginal weights of lambda (target is weight(lambda) * q_{a,b}(lambda)):
//   cdf:  Phi((eta + (1-kappa) lambda / 2) / sqrt(lambda)),  (a, b) = (1, kappa)
//   pdf:  lambda^{-1/2} phi((eta + (a-b) lambda / 2) / sqrt(lambda)),  a + b = kappa

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "powerlogit/distributions.hpp"
#include "powerlogit/errors.hpp"
#include "powerlogit/math.hpp"
#include "powerlogit/rng.hpp"

namespace powerlogit {

enum class RepresentationKind { cdf, pdf };

/// Likelihood representation. For pdf, `a` is fixed and b = kappa_i - a is
/// derived per row so that a + b matches each row's multiplicity.
struct Representation {
  RepresentationKind kind = RepresentationKind::pdf;
  double a = 0.5;

  static Representation cdf() { return {RepresentationKind::cdf, 1.0}; }
  static Representation pdf(double a = 0.5) { return {RepresentationKind::pdf, a}; }

  bool is_cdf() const noexcept { return kind == RepresentationKind::cdf; }

  /// Polya shape (a, b) for a row with multiplicity kappa_i.
  std::pair<double, double> shape(double kappa_i) const {
    if (!(kappa_i > 0.0)) throw DomainError("row multiplicity must be positive");
    if (is_cdf()) return {1.0, kappa_i};
    if (!(a > 0.0) || !(kappa_i - a > 0.0)) {
      throw UsageError("pdf representation needs 0 < a < kappa_i (a=" + std::to_string(a) +
                       ", kappa_i=" + std::to_string(kappa_i) + ")");
    }
    return {a, kappa_i - a};
  }
};

inline const char* to_string(RepresentationKind k) {
  return k == RepresentationKind::cdf ? "cdf" : "pdf";
}

/// log of the lambda weight for one row.
inline double lambda_log_weight(double eta, double kappa_i, double lambda, const Representation& rep) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const double root = std::sqrt(lambda);
  if (rep.is_cdf()) {
    return math::norm_log_cdf((eta + 0.5 * (1.0 - kappa_i) * lambda) / root);
  }
  const auto [a, b] = rep.shape(kappa_i);
  return -0.5 * std::log(lambda) + math::norm_log_pdf((eta + 0.5 * (a - b) * lambda) / root);
}

inline double lambda_weight(double eta, double kappa_i, double lambda, const Representation& rep) {
  return std::exp(lambda_log_weight(eta, kappa_i, lambda, rep));
}

/// z | eta, lambda ~ N+(eta + (1-kappa) lambda / 2, lambda).
inline double draw_z(double eta, double lambda, double kappa_i, RngStream& rng) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  return sample_truncated_normal_positive(eta + 0.5 * (1.0 - kappa_i) * lambda, lambda, rng);
}

struct MhOutcome {
  double lambda;
  int accepted;
};

/// `thin` independence Metropolis-Hastings steps with proposal q_{a,b}.
/// `polya` must match rep.shape(kappa_i).
inline MhOutcome mh_update_lambda(double lambda, double eta, double kappa_i, const Representation& rep,
                                  const PolyaSampler& polya, int thin, RngStream& rng) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  double log_w = lambda_log_weight(eta, kappa_i, lambda, rep);
  int accepted = 0;
  for (int step = 0; step < thin; ++step) {
    const double proposal = polya(rng);
    const double log_w_new = lambda_log_weight(eta, kappa_i, proposal, rep);
    if (log_w_new >= log_w || std::log(rng.uniform()) < log_w_new - log_w) {
      lambda = proposal;
      log_w = log_w_new;
      ++accepted;
    }
  }
  return {lambda, accepted};
}

inline MhOutcome mh_update_lambda(double lambda, double eta, double kappa_i, const Representation& rep,
                                  const PolyaParams& polya, int thin, RngStream& rng) {
  return mh_update_lambda(lambda, eta, kappa_i, rep, PolyaSampler(polya), thin, rng);
}

struct SliceOutcome {
  double lambda;
  std::int64_t rejections;
};

inline constexpr std::int64_t kDefaultSliceCap = 1'000'000;

/// Slice update: u ~ U(0, w(lambda)), then draw from q_{a,b} until w > u.
inline SliceOutcome slice_update_lambda(double lambda, double eta, double kappa_i, const Representation& rep,
                                        const PolyaSampler& polya, RngStream& rng,
                                        std::int64_t cap = kDefaultSliceCap) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const double log_u = lambda_log_weight(eta, kappa_i, lambda, rep) + std::log(rng.uniform());
  for (std::int64_t rejections = 0; rejections <= cap; ++rejections) {
    const double proposal = polya(rng);
    if (lambda_log_weight(eta, kappa_i, proposal, rep) > log_u) return {proposal, rejections};
  }
  throw SamplerStallError(eta, kappa_i, cap);
}

inline SliceOutcome slice_update_lambda(double lambda, double eta, double kappa_i, const Representation& rep,
                                        const PolyaParams& polya, RngStream& rng,
                                        std::int64_t cap = kDefaultSliceCap) {
  return slice_update_lambda(lambda, eta, kappa_i, rep, PolyaSampler(polya), rng, cap);
}

}  // namespace powerlogit
