#pragma once

// Regularization prior as a normal scale mixture:
//   beta_j | omega_j, nu ~ N(0, omega_j nu^2 sigma_j^2 / kappa^{2/alpha})
// with omega_j ~ Exp(mean 2) for the lasso (alpha = 1) and omega_j = 1 for
// ridge (alpha = 2). Unpenalized coordinates carry zero prior precision.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "powerlogit/distributions.hpp"
#include "powerlogit/errors.hpp"
#include "powerlogit/rng.hpp"

namespace powerlogit {

/// Per-coordinate penalty scale sigma_j; std::nullopt marks an unpenalized
/// coordinate (sigma_j^2 = infinity).
using PenaltyScale = std::optional<double>;
inline constexpr std::nullopt_t kUnpenalized = std::nullopt;

enum class NuMode { sample_nu, sample_nu_sq, fixed };

struct PriorSpec {
  int alpha = 1;
  double r = 2.0;
  double d = 0.1;
  NuMode nu_mode = NuMode::sample_nu;
  double nu_fixed = 1.0;  // used when nu_mode == fixed
  std::vector<PenaltyScale> sigma;

  /// Shape of the powered hyperprior, r_kappa = kappa (r + 1) - 1.
  double r_kappa(double kappa) const { return kappa * (r + 1.0) - 1.0; }
  /// Scale of the powered hyperprior, d_kappa = kappa d.
  double d_kappa(double kappa) const { return kappa * d; }

  std::size_t penalized_count() const {
    return static_cast<std::size_t>(std::count_if(sigma.begin(), sigma.end(),
                                                  [](const PenaltyScale& s) { return s.has_value(); }));
  }
  bool penalty_active() const { return penalized_count() > 0; }

  /// Every coordinate penalized with unit scale, except those listed.
  static std::vector<PenaltyScale> unit_scales(std::size_t p, std::vector<std::size_t> unpenalized = {}) {
    std::vector<PenaltyScale> s(p, 1.0);
    for (const auto j : unpenalized) {
      if (j < p) s[j] = kUnpenalized;
    }
    return s;
  }

  void validate(std::size_t n_rows) const {
    if (alpha != 1 && alpha != 2) throw UsageError("alpha must be 1 (lasso) or 2 (ridge)");
    if (nu_mode == NuMode::fixed) {
      if (!(nu_fixed > 0.0)) throw UsageError("fixed nu must be positive");
    } else if (!(r > 0.0) || !(d > 0.0)) {
      throw UsageError("hyperprior (r, d) must be positive");
    }
    for (const auto& s : sigma) {
      if (s && !(*s > 0.0)) throw UsageError("penalty scales must be positive");
    }
    const std::size_t p = sigma.size();
    const std::size_t required = p > n_rows ? p - n_rows : 0;
    if (penalized_count() < required) {
      throw UsageError("at least " + std::to_string(required) + " coordinates must be penalized when p=" +
                       std::to_string(p) + " exceeds n=" + std::to_string(n_rows));
    }
  }
};

inline constexpr double kBetaFloor = 1e-8;

/// omega_j | beta_j, nu: 1/omega_j ~ InverseGaussian(nu sigma_j / (kappa |beta_j|), 1).
inline double draw_omega(double beta_j, double nu, double kappa, double sigma_j, RngStream& rng) {
  const double magnitude = std::max(std::abs(beta_j), kBetaFloor);
  const double mu = nu * sigma_j / (kappa * magnitude);
  return 1.0 / sample_inverse_gaussian(mu, 1.0, rng);
}

/// nu | beta under an inverse-gamma prior on nu (lasso only; omega integrated out).
inline double draw_nu(const Eigen::VectorXd& beta, double kappa, const PriorSpec& prior, RngStream& rng) {
  double l1 = 0.0;
  double count = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const auto& s = prior.sigma[static_cast<std::size_t>(j)];
    if (!s) continue;
    l1 += std::abs(beta[j] / *s);
    count += 1.0;
  }
  return sample_inverse_gamma(prior.r_kappa(kappa) + kappa * count, prior.d_kappa(kappa) + kappa * l1, rng);
}

/// nu^2 | beta, omega under an inverse-gamma prior on nu^2; returns nu.
inline double draw_nu_sq(const Eigen::VectorXd& beta, const Eigen::VectorXd& omega, double kappa,
                         const PriorSpec& prior, RngStream& rng) {
  const double power = std::pow(kappa, 2.0 / prior.alpha);
  double quad = 0.0;
  double count = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const auto& s = prior.sigma[static_cast<std::size_t>(j)];
    if (!s) continue;
    const double w = prior.alpha == 2 ? 1.0 : omega[j];
    quad += beta[j] * beta[j] / ((*s) * (*s) * w);
    count += 1.0;
  }
  const double nu_sq = sample_inverse_gamma(prior.r_kappa(kappa) + 0.5 * kappa * count,
                                            prior.d_kappa(kappa) + 0.5 * power * quad, rng);
  return std::sqrt(nu_sq);
}

/// Diagonal prior precision kappa^{2/alpha} / (nu^2 sigma_j^2 omega_j); zero
/// for unpenalized coordinates.
inline Eigen::VectorXd prior_precision(const Eigen::VectorXd& omega, double nu, double kappa, int alpha,
                                       const std::vector<PenaltyScale>& sigma) {
  if (!(nu > 0.0)) throw DomainError("nu must be positive");
  const double power = std::pow(kappa, 2.0 / alpha);
  Eigen::VectorXd out(static_cast<Eigen::Index>(sigma.size()));
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    const auto idx = static_cast<Eigen::Index>(j);
    if (!sigma[j]) {
      out[idx] = 0.0;
      continue;
    }
    const double w = alpha == 2 ? 1.0 : omega[idx];
    out[idx] = power / (nu * nu * (*sigma[j]) * (*sigma[j]) * w);
  }
  return out;
}

}  // namespace powerlogit
