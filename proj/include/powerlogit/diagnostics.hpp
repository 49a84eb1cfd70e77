#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "powerlogit/errors.hpp"
#include "powerlogit/math.hpp"
#include "powerlogit/sampler.hpp"

namespace powerlogit {

struct EssResult {
  double value = 1.0;
  bool degenerate = false;
};

/// Geyer's initial positive sequence estimator: S / (1 + 2 sum_t rho_t), the
/// sum stopping at the first pair (rho_{2k} + rho_{2k+1}) that is not positive.
inline EssResult effective_sample_size(const Eigen::VectorXd& series) {
  const Eigen::Index s = series.size();
  if (s < 10) throw UsageError("effective sample size needs at least 10 samples");
  const Eigen::VectorXd centred = series.array() - series.mean();
  const double c0 = centred.squaredNorm() / static_cast<double>(s);
  if (!(c0 > 1e-300 * std::max(1.0, series.cwiseAbs().maxCoeff()))) return {1.0, true};
  auto rho = [&](Eigen::Index lag) {
    const double c = centred.head(s - lag).dot(centred.tail(s - lag)) / static_cast<double>(s);
    return c / c0;
  };
  double sum = 0.0;  // sum over t >= 1 of rho_t
  for (Eigen::Index k = 0; 2 * k + 1 < s; ++k) {
    const double even = k == 0 ? 1.0 : rho(2 * k);
    const double odd = rho(2 * k + 1);
    const double pair = even + odd;
    if (!(pair > 0.0)) break;
    sum += k == 0 ? odd : pair;
  }
  const double ess = static_cast<double>(s) / (1.0 + 2.0 * sum);
  return {std::clamp(ess, 1.0, static_cast<double>(s)), false};
}

struct ChainDiagnostics {
  std::vector<EssResult> ess;
  std::vector<double> acceptance_rates;  // one per stage (MH) or slice acceptance 1/(1+mean rejections)
  std::vector<double> wall_time;
};

inline ChainDiagnostics diagnose(const Trace& trace) {
  ChainDiagnostics d;
  const Eigen::MatrixXd kept = trace.kept_beta();
  for (Eigen::Index j = 0; j < kept.cols(); ++j) {
    d.ess.push_back(kept.rows() >= 10 ? effective_sample_size(kept.col(j)) : EssResult{1.0, true});
  }
  for (const auto& s : trace.stages) {
    if (s.mh_proposals > 0) {
      d.acceptance_rates.push_back(s.mh_acceptance_rate());
    } else if (s.slice_draws > 0) {
      d.acceptance_rates.push_back(static_cast<double>(s.slice_draws) /
                                   static_cast<double>(s.slice_draws + s.slice_rejections));
    }
    d.wall_time.push_back(s.seconds);
  }
  return d;
}

inline constexpr double kProbabilityClamp = 1e-12;

/// Mean of (1 - p_i) log(1 - phat_i) + p_i log(phat_i).
inline double expected_log_likelihood(const Eigen::VectorXd& true_p, const Eigen::VectorXd& est_p) {
  if (true_p.size() != est_p.size()) throw UsageError("probability vectors differ in length");
  if (true_p.size() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < true_p.size(); ++i) {
    const double p = std::clamp(true_p[i], 0.0, 1.0);
    const double q = std::clamp(est_p[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total += (1.0 - p) * std::log1p(-q) + p * std::log(q);
  }
  return total / static_cast<double>(true_p.size());
}

/// Labels are +1 / -1 (0 is read as -1). est_p >= threshold predicts +1.
inline double misclassification_rate(const Eigen::VectorXd& labels, const Eigen::VectorXd& est_p,
                                     double threshold = 0.5) {
  if (labels.size() != est_p.size()) throw UsageError("labels and probabilities differ in length");
  if (labels.size() == 0) return 0.0;
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const bool positive = labels[i] > 0.0;
    const bool predicted = est_p[i] >= threshold;
    if (positive != predicted) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

/// P(y = +1 | x, beta) for each row of x.
inline Eigen::VectorXd predict(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x) {
  if (x.cols() != beta.size()) throw UsageError("design width does not match the coefficient vector");
  const Eigen::VectorXd eta = x * beta;
  return eta.unaryExpr([](double v) { return math::logistic(v); });
}

inline double predict(const Eigen::VectorXd& beta, const Eigen::RowVectorXd& x) {
  if (x.size() != beta.size()) throw UsageError("design width does not match the coefficient vector");
  return math::logistic(x.dot(beta.transpose()));
}

/// Average of logistic(x' beta_s) over the rows of `samples`.
inline Eigen::VectorXd predict(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& x) {
  if (x.cols() != samples.cols()) throw UsageError("design width does not match the coefficient samples");
  if (samples.rows() == 0) throw UsageError("no samples to average over");
  const Eigen::MatrixXd eta = x * samples.transpose();
  Eigen::VectorXd out = eta.unaryExpr([](double v) { return math::logistic(v); }).rowwise().mean();
  return out;
}

/// Posterior-averaged probabilities over the post-burn-in rows of the last stage.
inline Eigen::VectorXd predict(const Trace& trace, const Eigen::MatrixXd& x) {
  return predict(trace.kept_beta(), x);
}

}  // namespace powerlogit
