#pragma once

// Synthetic generators and the desk-scale study drivers used by the CLI
// bench commands and the acceptance suite.

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "powerlogit/data.hpp"
#include "powerlogit/diagnostics.hpp"
#include "powerlogit/math.hpp"
#include "powerlogit/rng.hpp"
#include "powerlogit/sampler.hpp"

namespace powerlogit {

/// eta_i = intercept + x_i' slopes with x_i uniform on the unit cube and
/// y_i ~ Bin(trials, logistic(eta_i)). Raw predictors are returned unscaled.
struct BinomialSimulation {
  Eigen::MatrixXd x;
  Eigen::VectorXd successes;
  Eigen::VectorXd trials;
  Eigen::VectorXd probability;
};

inline BinomialSimulation simulate_binomial(Eigen::Index rows, const Eigen::VectorXd& slopes, double intercept,
                                            int trials, RngStream& rng) {
  BinomialSimulation sim;
  sim.x.resize(rows, slopes.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < slopes.size(); ++j) sim.x(i, j) = rng.uniform();
  }
  sim.probability = (sim.x * slopes).array() + intercept;
  sim.probability = sim.probability.unaryExpr([](double e) { return math::logistic(e); });
  sim.trials = Eigen::VectorXd::Constant(rows, trials);
  sim.successes.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    int y = 0;
    for (int k = 0; k < trials; ++k) y += rng.uniform() < sim.probability[i] ? 1 : 0;
    sim.successes[i] = y;
  }
  return sim;
}

inline BinomialDataset to_dataset(const BinomialSimulation& sim, bool scale = true) {
  BinomialDataset ds;
  ds.design = make_design(sim.x, {}, true, scale);
  ds.successes = sim.successes;
  ds.trials = sim.trials;
  return ds;
}

inline Eigen::VectorXd binomial_study_slopes() {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(9);
  b.head(4) << 2.0, -3.0, 2.0, -4.0;
  return b;
}

enum class Encoding { flat, multi };

inline const char* to_string(Encoding e) { return e == Encoding::flat ? "flat" : "multi"; }

struct BinomialBenchOptions {
  int repetitions = 10;
  int rows = 100;
  int trials = 20;
  int iterations = 1000;
  int burn_in = 100;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BinomialBenchCell {
  RepresentationKind rep = RepresentationKind::pdf;
  Encoding encoding = Encoding::multi;
  std::vector<double> rmse;
  std::vector<double> seconds;
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Sampler settings shared by the binomial study: lasso prior with nu
/// sampled, unpenalized intercept, MH lambda updates thinned by ceil(kappa_i).
inline SamplerConfig binomial_study_config(Eigen::Index p, const BinomialBenchOptions& opts) {
  SamplerConfig c;
  c.iterations = opts.iterations;
  c.burn_in = opts.burn_in;
  c.threads = opts.threads;
  c.prior.sigma = PriorSpec::unit_scales(static_cast<std::size_t>(p), {0});
  return c;
}

/// RMSE of the posterior-mean slopes (original units) against the truth.
inline double slope_rmse(const Design& design, const Eigen::VectorXd& beta_scaled, const Eigen::VectorXd& slopes) {
  const Eigen::VectorXd original = design.to_original_units(beta_scaled);
  return std::sqrt((original.tail(slopes.size()) - slopes).squaredNorm() / static_cast<double>(slopes.size()));
}

/// {cdf, pdf} x {flat, multi} grid over repeated synthetic datasets.
inline std::vector<BinomialBenchCell> run_binomial_bench(const BinomialBenchOptions& opts) {
  std::vector<BinomialBenchCell> cells;
  for (const auto rep : {RepresentationKind::cdf, RepresentationKind::pdf}) {
    for (const auto enc : {Encoding::flat, Encoding::multi}) cells.push_back({rep, enc, {}, {}});
  }
  const Eigen::VectorXd slopes = binomial_study_slopes();
  const RngStream root(opts.seed);
  for (int r = 0; r < opts.repetitions; ++r) {
    RngStream gen = root.substream(static_cast<std::uint64_t>(r)).substream(0);
    const BinomialDataset ds = to_dataset(simulate_binomial(opts.rows, slopes, 1.0, opts.trials, gen));
    const EncodedData flat = flatten(ds);
    const EncodedData multi = multiplicity_encode(ds);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto& cell = cells[c];
      SamplerConfig cfg = binomial_study_config(ds.design.p(), opts);
      cfg.rep = cell.rep == RepresentationKind::cdf ? Representation::cdf() : Representation::pdf();
      cfg.seed = root.substream(static_cast<std::uint64_t>(r)).substream(1 + c).stream_id();
      const auto t0 = std::chrono::steady_clock::now();
      const Trace trace = run_chain(cfg, cell.encoding == Encoding::flat ? flat : multi);
      cell.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      cell.rmse.push_back(slope_rmse(ds.design, trace.kept_beta().colwise().mean().transpose(), slopes));
    }
  }
  return cells;
}

struct PggnOptions {
  int repetitions = 10;
  int p = 100;
  int rows = 20;
  int trials = 5;
  int test_rows = 100;
  int test_trials = 100;
  int iterations = 1500;
  int burn_in = 500;
  int map_iterations = 500;
  int map_burn_in = 100;
  double map_kappa = 10.0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct PggnResult {
  std::vector<double> ell_mean;
  std::vector<double> miss_mean;
  std::vector<double> ell_map;
  std::vector<double> miss_map;
};

inline Eigen::VectorXd pggn_slopes(int p) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  const double lead[] = {2.0, -3.0, 0.74, -0.9};
  for (int j = 0; j < std::min(p, 4); ++j) b[j] = lead[j];
  return b;
}

/// Scaled variant of the p >> n predictive study: 20 training locations with
/// 5 trials each, 100 test locations with 100 trials each. Reports ELL and
/// misclassification for the posterior mean (kappa = 1) and a kappa = 10
/// chain started from the final kappa = 1 state.
inline PggnResult run_pggn(const PggnOptions& opts) {
  PggnResult out;
  const Eigen::VectorXd slopes = pggn_slopes(opts.p);
  const RngStream root(opts.seed);
  for (int r = 0; r < opts.repetitions; ++r) {
    const RngStream rep_root = root.substream(static_cast<std::uint64_t>(r));
    RngStream gen = rep_root.substream(0);
    const BinomialSimulation train = simulate_binomial(opts.rows, slopes, 1.0, opts.trials, gen);
    const BinomialSimulation test = simulate_binomial(opts.test_rows, slopes, 1.0, opts.test_trials, gen);
    const BinomialDataset ds = to_dataset(train);
    const EncodedData data = multiplicity_encode(ds);

    SamplerConfig cfg;
    cfg.iterations = opts.iterations;
    cfg.burn_in = opts.burn_in;
    cfg.threads = opts.threads;
    cfg.seed = rep_root.substream(1).stream_id();
    cfg.prior.sigma = PriorSpec::unit_scales(static_cast<std::size_t>(ds.design.p()), {0});
    GibbsSampler sampler(data, cfg);
    Trace trace;
    sampler.run_stage(cfg.iterations, cfg.burn_in, trace);

    // Each test location contributes its binomial trials as labelled rows.
    const Eigen::MatrixXd x_test = ds.design.scale_rows(test.x);
    const Eigen::VectorXd p_mean = predict(trace.kept_beta(), x_test);
    sampler.set_kappa(opts.map_kappa);
    Trace map_trace;
    sampler.run_stage(opts.map_iterations, opts.map_burn_in, map_trace);
    const Eigen::VectorXd p_map = predict(Eigen::VectorXd(map_trace.kept_beta().colwise().mean().transpose()), x_test);

    auto miss = [&](const Eigen::VectorXd& est) {
      double wrong = 0.0;
      double total = 0.0;
      for (Eigen::Index i = 0; i < est.size(); ++i) {
        const bool predict_positive = est[i] >= 0.5;
        wrong += predict_positive ? test.trials[i] - test.successes[i] : test.successes[i];
        total += test.trials[i];
      }
      return wrong / total;
    };
    out.ell_mean.push_back(expected_log_likelihood(test.probability, p_mean));
    out.ell_map.push_back(expected_log_likelihood(test.probability, p_map));
    out.miss_mean.push_back(miss(p_mean));
    out.miss_map.push_back(miss(p_map));
  }
  return out;
}

}  // namespace powerlogit
