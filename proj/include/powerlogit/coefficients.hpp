#pragma once

// Full conditional of beta given the latents:
//   precision  V^{-1} = D + (yX)' Lambda^{-1} (yX),   D = prior precision diagonal
//   mean       V r,  r = (yX)' c  with
//     cdf:  c_i = (z_i - (1 - kappa_i) lambda_i / 2) / lambda_i
//     pdf:  c_i = a_i - (a_i - b_i) / 2
//
// Draws use the perturbation form beta = V (r + D^{1/2} e1 + Phi' e2) with
// Phi = Lambda^{-1/2} yX, e1 ~ N(0, I_p), e2 ~ N(0, I_n). Its covariance is
// V (D + Phi'Phi) V = V, and it only needs products with V, so the dense and
// Woodbury paths consume the same normals and agree to rounding.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "powerlogit/augmentation.hpp"
#include "powerlogit/data.hpp"
#include "powerlogit/errors.hpp"
#include "powerlogit/rng.hpp"

namespace powerlogit {

enum class SolverPath { direct, woodbury };

inline Eigen::MatrixXd assemble_precision(const EncodedData& data, const Eigen::VectorXd& lambda,
                                          const Eigen::VectorXd& prior_diag) {
  if ((lambda.array() <= 0.0).any()) throw DomainError("lambda must be positive");
  const Eigen::MatrixXd phi = data.yX.array().colwise() / lambda.array().sqrt();
  Eigen::MatrixXd precision = prior_diag.asDiagonal();
  precision.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose());
  precision.triangularView<Eigen::StrictlyUpper>() = precision.transpose();
  return precision;
}

/// Cholesky factor of a precision matrix. Rounding failures are retried with
/// a diagonal jitter of 1e-10 * trace/p, escalating x10 up to 1e-6 * trace/p.
/// A singular block of unpenalized coordinates is a conditioning error.
inline Eigen::LLT<Eigen::MatrixXd> factorize_precision(const Eigen::MatrixXd& precision,
                                                       const Eigen::VectorXd& prior_diag) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite() && llt.rcond() > 1e-14) return llt;

  std::vector<Eigen::Index> free;
  for (Eigen::Index j = 0; j < prior_diag.size(); ++j) {
    if (prior_diag[j] <= 0.0) free.push_back(j);
  }
  if (!free.empty()) {
    const auto k = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd block(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) block(r, c) = precision(free[r], free[c]);
    }
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(block, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff()))) {
      throw ConditioningError("precision is singular on the unpenalized coordinates (collinear design?)");
    }
  }
  const double base = precision.trace() / static_cast<double>(precision.rows());
  if (base > 0.0 && std::isfinite(base)) {
    for (double jitter = 1e-10 * base; jitter <= 1e-6 * base * (1.0 + 1e-9); jitter *= 10.0) {
      Eigen::MatrixXd shifted = precision;
      shifted.diagonal().array() += jitter;
      llt.compute(shifted);
      if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite()) return llt;
    }
  }
  throw ConditioningError("precision matrix is not positive definite");
}

/// The linear system behind one beta draw.
class BetaSystem {
 public:
  BetaSystem(const EncodedData& data, const Eigen::VectorXd& lambda, const Eigen::VectorXd& prior_diag,
             SolverPath path = SolverPath::direct)
      : prior_diag_(prior_diag), path_(path) {
    if (lambda.size() != data.n()) throw UsageError("lambda length does not match the number of rows");
    if (prior_diag.size() != data.p()) throw UsageError("prior precision length does not match p");
    if ((lambda.array() <= 0.0).any()) throw DomainError("lambda must be positive");
    phi_ = data.yX.array().colwise() / lambda.array().sqrt();
    if (path_ == SolverPath::woodbury) {
      if (!(prior_diag.array() > 0.0).all()) {
        throw SmwInapplicableError("Woodbury solve needs every coordinate penalized");
      }
      inv_diag_ = prior_diag.cwiseInverse();
      Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(phi_.rows(), phi_.rows());
      inner.selfadjointView<Eigen::Lower>().rankUpdate(phi_ * inv_diag_.cwiseSqrt().asDiagonal());
      llt_.compute(inner);
      if (llt_.info() != Eigen::Success) throw ConditioningError("Woodbury inner matrix is not positive definite");
    } else {
      Eigen::MatrixXd precision = prior_diag.asDiagonal();
      precision.selfadjointView<Eigen::Lower>().rankUpdate(phi_.transpose());
      precision.triangularView<Eigen::StrictlyUpper>() = precision.transpose();
      llt_ = factorize_precision(precision, prior_diag);
    }
  }

  SolverPath path() const noexcept { return path_; }
  Eigen::Index p() const { return phi_.cols(); }
  Eigen::Index n() const { return phi_.rows(); }

  /// V * rhs.
  Eigen::VectorXd apply_covariance(const Eigen::VectorXd& rhs) const {
    if (path_ == SolverPath::direct) return llt_.solve(rhs);
    const Eigen::VectorXd scaled = inv_diag_.cwiseProduct(rhs);
    if (phi_.rows() == 0) return scaled;
    const Eigen::VectorXd inner = llt_.solve(phi_ * scaled);
    return scaled - inv_diag_.cwiseProduct(phi_.transpose() * inner);
  }

  /// N(V rhs, V) draw from explicit standard normals.
  Eigen::VectorXd draw_from(const Eigen::VectorXd& rhs, const Eigen::VectorXd& e_p,
                            const Eigen::VectorXd& e_n) const {
    Eigen::VectorXd perturbed = rhs + prior_diag_.cwiseSqrt().cwiseProduct(e_p);
    if (phi_.rows() > 0) perturbed.noalias() += phi_.transpose() * e_n;
    return apply_covariance(perturbed);
  }

  Eigen::VectorXd draw(const Eigen::VectorXd& rhs, RngStream& rng) const {
    Eigen::VectorXd e_p(p());
    Eigen::VectorXd e_n(n());
    for (Eigen::Index j = 0; j < e_p.size(); ++j) e_p[j] = rng.normal();
    for (Eigen::Index i = 0; i < e_n.size(); ++i) e_n[i] = rng.normal();
    return draw_from(rhs, e_p, e_n);
  }

 private:
  Eigen::MatrixXd phi_;
  Eigen::VectorXd prior_diag_;
  Eigen::VectorXd inv_diag_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  SolverPath path_;
};

/// r = (yX)' c so that the conditional mean is V r. `kappa` holds the
/// effective per-row multiplicities.
inline Eigen::VectorXd conditional_mean_rhs(const EncodedData& data, const Eigen::VectorXd& lambda,
                                            const std::optional<Eigen::VectorXd>& z, const Representation& rep,
                                            const Eigen::VectorXd& kappa) {
  Eigen::VectorXd c(data.n());
  if (rep.is_cdf()) {
    if (!z || z->size() != data.n()) throw UsageError("cdf representation needs the latent z vector");
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      c[i] = ((*z)[i] - 0.5 * (1.0 - kappa[i]) * lambda[i]) / lambda[i];
    }
  } else {
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const auto [a, b] = rep.shape(kappa[i]);
      c[i] = a - 0.5 * (a - b);
    }
  }
  return data.yX.transpose() * c;
}

inline Eigen::VectorXd conditional_mean(const EncodedData& data, const Eigen::VectorXd& lambda,
                                        const std::optional<Eigen::VectorXd>& z, const Representation& rep,
                                        const Eigen::VectorXd& kappa, const BetaSystem& system) {
  return system.apply_covariance(conditional_mean_rhs(data, lambda, z, rep, kappa));
}

inline Eigen::VectorXd draw_beta(const BetaSystem& system, const Eigen::VectorXd& rhs, RngStream& rng) {
  return system.draw(rhs, rng);
}

/// V * rhs through the n x n Woodbury identity.
inline Eigen::VectorXd smw_apply(const EncodedData& data, const Eigen::VectorXd& lambda,
                                 const Eigen::VectorXd& prior_diag, const Eigen::VectorXd& rhs) {
  return BetaSystem(data, lambda, prior_diag, SolverPath::woodbury).apply_covariance(rhs);
}

}  // namespace powerlogit
