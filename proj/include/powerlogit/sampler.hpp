#pragma once

// Gibbs sampler for the power posterior
//   pi_kappa(beta | y) ∝ exp{-kappa (sum_i log(1 + e^{-y_i x_i'beta}) + sum_j |beta_j / (nu sigma_j)|^alpha)}
// and simulated annealing over kappa for MAP / MLE estimates.
//
// One sweep updates, in order: omega -> lambda -> z (cdf only) -> beta -> nu.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "powerlogit/augmentation.hpp"
#include "powerlogit/coefficients.hpp"
#include "powerlogit/data.hpp"
#include "powerlogit/distributions.hpp"
#include "powerlogit/errors.hpp"
#include "powerlogit/parallel.hpp"
#include "powerlogit/prior.hpp"
#include "powerlogit/rng.hpp"

namespace powerlogit {

enum class LambdaMethod { mh, slice };
enum class SmwMode { automatic, always, never };

inline const char* to_string(LambdaMethod m) { return m == LambdaMethod::mh ? "mh" : "slice"; }

struct SamplerConfig {
  double kappa = 1.0;
  Representation rep = Representation::pdf();
  PriorSpec prior;
  LambdaMethod lambda_method = LambdaMethod::mh;
  int iterations = 1000;  // S, including burn-in
  int burn_in = 100;
  int polya_terms = 100;
  bool polya_tail_correction = true;
  int thin = 0;  // MH steps per saved lambda; 0 means ceil(kappa_i) per row
  std::uint64_t seed = 0;
  int threads = 1;
  SmwMode smw = SmwMode::automatic;
  std::int64_t slice_cap = kDefaultSliceCap;
  bool allow_prior_only = false;
};

struct ChainState {
  Eigen::VectorXd beta;
  double nu = 1.0;
  Eigen::VectorXd lambda;
  Eigen::VectorXd z;  // empty in the pdf representation
  Eigen::VectorXd omega;
};

struct StageRecord {
  double kappa = 1.0;
  int iterations = 0;
  int burn_in = 0;
  Eigen::Index first_row = 0;  // offset of the stage in Trace::beta
  double seconds = 0.0;
  std::int64_t mh_proposals = 0;
  std::int64_t mh_accepted = 0;
  std::int64_t slice_draws = 0;
  std::int64_t slice_rejections = 0;
  std::int64_t slice_max_rejections = 0;
  SolverPath solver = SolverPath::direct;

  double mh_acceptance_rate() const {
    return mh_proposals > 0 ? static_cast<double>(mh_accepted) / static_cast<double>(mh_proposals) : 0.0;
  }
};

/// Every sweep is stored; burn-in rows are flagged through the stage records.
struct Trace {
  Eigen::MatrixXd beta;
  Eigen::VectorXd nu;
  std::vector<StageRecord> stages;

  Eigen::Index size() const { return beta.rows(); }

  bool is_burn_in(Eigen::Index row) const {
    for (const auto& s : stages) {
      if (row >= s.first_row && row < s.first_row + s.iterations) return row < s.first_row + s.burn_in;
    }
    return false;
  }

  Eigen::MatrixXd kept_beta(std::size_t stage) const {
    const auto& s = stages.at(stage);
    return beta.middleRows(s.first_row + s.burn_in, s.iterations - s.burn_in);
  }
  Eigen::VectorXd kept_nu(std::size_t stage) const {
    const auto& s = stages.at(stage);
    return nu.segment(s.first_row + s.burn_in, s.iterations - s.burn_in);
  }
  Eigen::MatrixXd kept_beta() const { return kept_beta(stages.size() - 1); }
  Eigen::VectorXd kept_nu() const { return kept_nu(stages.size() - 1); }
};

struct AnnealStage {
  double kappa = 1.0;
  int iterations = 500;
  int burn_in = 100;
};

/// Nondecreasing sequence of multiplicities; chains are stitched end to end.
struct AnnealSchedule {
  std::vector<AnnealStage> stages;

  void validate() const {
    if (stages.empty()) throw UsageError("annealing schedule is empty");
    double previous = 0.0;
    for (const auto& s : stages) {
      if (!(s.kappa > 0.0)) throw UsageError("schedule multiplicities must be positive");
      if (s.kappa < previous) throw UsageError("schedule multiplicities must be nondecreasing");
      if (s.iterations <= s.burn_in || s.burn_in < 0) {
        throw UsageError("each schedule stage needs more iterations than burn-in");
      }
      previous = s.kappa;
    }
  }

  /// kappa = 1, 5, 10, 20.
  static AnnealSchedule standard(int iterations = 500, int burn_in = 100) {
    AnnealSchedule s;
    for (const double k : {1.0, 5.0, 10.0, 20.0}) s.stages.push_back({k, iterations, burn_in});
    return s;
  }

  /// Parses "kappa:iterations[:burn],..." e.g. "1:500,5:500,10:500,20:500".
  static AnnealSchedule parse(const std::string& text, int default_burn_in = 100) {
    AnnealSchedule s;
    std::stringstream all(text);
    std::string item;
    while (std::getline(all, item, ',')) {
      std::stringstream parts(item);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(parts, field, ':')) fields.push_back(field);
      if (fields.size() < 2 || fields.size() > 3) throw UsageError("bad schedule stage '" + item + "'");
      AnnealStage stage;
      try {
        stage.kappa = std::stod(fields[0]);
        stage.iterations = std::stoi(fields[1]);
        stage.burn_in = fields.size() == 3 ? std::stoi(fields[2]) : default_burn_in;
      } catch (const std::exception&) {
        throw UsageError("bad schedule stage '" + item + "'");
      }
      s.stages.push_back(stage);
    }
    s.validate();
    return s;
  }

  std::string to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (i) out << ',';
      out << stages[i].kappa << ':' << stages[i].iterations << ':' << stages[i].burn_in;
    }
    return out.str();
  }
};

enum class EstimateKind { posterior_mean, map, mle };

inline const char* to_string(EstimateKind k) {
  switch (k) {
    case EstimateKind::posterior_mean: return "posterior_mean";
    case EstimateKind::map: return "map";
    case EstimateKind::mle: return "mle";
  }
  return "unknown";
}

struct PointEstimate {
  Eigen::VectorXd beta;  // sampler (scaled) units
  double nu = 1.0;
  bool nu_fixed = false;
  EstimateKind kind = EstimateKind::posterior_mean;
  AnnealSchedule schedule;
  std::vector<StageRecord> stages;
};

struct AnnealResult {
  PointEstimate estimate;
  Trace trace;
  std::optional<Trace> nu_stage;  // kappa = 1 chain used to estimate nu (two-stage only)
  ChainState final_state;
};

namespace detail {

enum : std::uint64_t { kTagOmega = 1, kTagRows = 2, kTagBeta = 3, kTagNu = 4, kTagInit = 5 };

}  // namespace detail

class GibbsSampler {
 public:
  GibbsSampler(const EncodedData& data, SamplerConfig config) : GibbsSampler(data, std::move(config), std::nullopt) {}

  GibbsSampler(const EncodedData& data, SamplerConfig config, std::optional<ChainState> initial)
      : data_(data), config_(std::move(config)), root_(config_.seed) {
    const auto p = static_cast<std::size_t>(data_.p());
    if (config_.prior.sigma.empty()) config_.prior.sigma = PriorSpec::unit_scales(p);
    validate();
    rebuild_kappa();
    if (initial) {
      state_ = std::move(*initial);
      check_state();
    } else {
      initialize();
    }
  }

  const ChainState& state() const noexcept { return state_; }
  const SamplerConfig& config() const noexcept { return config_; }
  const EncodedData& data() const noexcept { return data_; }

  /// Change the multiplicity between annealing stages; latents carry over.
  void set_kappa(double kappa) {
    if (!(kappa > 0.0)) throw UsageError("kappa must be positive");
    config_.kappa = kappa;
    rebuild_kappa();
    if (state_.lambda.size() > 0) check_representation();
  }

  void fix_nu(double nu) {
    if (!(nu > 0.0)) throw UsageError("fixed nu must be positive");
    config_.prior.nu_mode = NuMode::fixed;
    config_.prior.nu_fixed = nu;
    state_.nu = nu;
  }

  /// One full sweep; statistics are added to `stats`.
  void step(StageRecord& stats) {
    const RngStream sweep = root_.substream(sweep_++);
    sweep_impl(sweep, stats);
  }

  void step() {
    StageRecord scratch;
    step(scratch);
  }

  /// Sweep driven by an external stream (per-row streams derive from it).
  void step_with(const RngStream& sweep, StageRecord& stats) { sweep_impl(sweep, stats); }

  SolverPath solver_path() const {
    const bool all_penalized = config_.prior.penalized_count() == config_.prior.sigma.size();
    switch (config_.smw) {
      case SmwMode::always: return SolverPath::woodbury;
      case SmwMode::never: return SolverPath::direct;
      case SmwMode::automatic: break;
    }
    return all_penalized && data_.p() > 2 * data_.n() ? SolverPath::woodbury : SolverPath::direct;
  }

  /// Runs `iterations` sweeps and appends them to `trace` as a new stage.
  void run_stage(int iterations, int burn_in, Trace& trace) {
    if (iterations <= 0 || burn_in < 0 || burn_in >= iterations) {
      throw UsageError("stage needs iterations > burn-in >= 0");
    }
    StageRecord record;
    record.kappa = config_.kappa;
    record.iterations = iterations;
    record.burn_in = burn_in;
    record.first_row = trace.beta.rows();
    record.solver = solver_path();
    const Eigen::Index start = trace.beta.rows();
    trace.beta.conservativeResize(start + iterations, data_.p());
    trace.nu.conservativeResize(start + iterations);
    const auto t0 = std::chrono::steady_clock::now();
    for (int s = 0; s < iterations; ++s) {
      step(record);
      trace.beta.row(start + s) = state_.beta.transpose();
      trace.nu[start + s] = state_.nu;
    }
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    trace.stages.push_back(record);
  }

  /// Effective multiplicity of every row.
  const Eigen::VectorXd& row_kappa() const noexcept { return row_kappa_; }

 private:
  void validate() const {
    if (!(config_.kappa > 0.0)) throw UsageError("kappa must be positive");
    if (config_.polya_terms < 1) throw UsageError("Polya truncation must be at least 1");
    if (config_.threads < 1) throw UsageError("thread count must be at least 1");
    if (config_.thin < 0) throw UsageError("thinning must be nonnegative");
    if (data_.n() == 0 && !config_.allow_prior_only) {
      throw UsageError("dataset is empty (enable prior-only mode to sample the prior)");
    }
    if (data_.kappa.size() != data_.n()) throw UsageError("multiplicity vector length does not match rows");
    if ((data_.kappa.array() <= 0.0).any()) throw UsageError("row multiplicities must be positive");
    if (config_.prior.sigma.size() != static_cast<std::size_t>(data_.p())) {
      throw UsageError("penalty scale vector length does not match p");
    }
    config_.prior.validate(static_cast<std::size_t>(data_.n()));
    if (config_.smw == SmwMode::always && config_.prior.penalized_count() != config_.prior.sigma.size()) {
      throw SmwInapplicableError("Woodbury solve requested but some coordinates are unpenalized");
    }
    std::vector<Eigen::Index> free;
    for (std::size_t j = 0; j < config_.prior.sigma.size(); ++j) {
      if (!config_.prior.sigma[j]) free.push_back(static_cast<Eigen::Index>(j));
    }
    if (!free.empty()) {
      Eigen::MatrixXd cols(data_.n(), static_cast<Eigen::Index>(free.size()));
      for (std::size_t k = 0; k < free.size(); ++k) cols.col(static_cast<Eigen::Index>(k)) = data_.yX.col(free[k]);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
      if (qr.rank() < cols.cols()) {
        throw ConditioningError("unpenalized columns of the design are collinear");
      }
    }
  }

  void check_representation() const {
    for (Eigen::Index i = 0; i < row_kappa_.size(); ++i) (void)config_.rep.shape(row_kappa_[i]);
  }

  void rebuild_kappa() {
    row_kappa_ = config_.kappa * data_.kappa;
    check_representation();
    std::map<std::pair<double, double>, std::size_t> index;
    polya_.clear();
    row_polya_.assign(static_cast<std::size_t>(data_.n()), 0);
    row_thin_.assign(static_cast<std::size_t>(data_.n()), 1);
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      const auto shape = config_.rep.shape(row_kappa_[i]);
      auto it = index.find(shape);
      if (it == index.end()) {
        it = index.emplace(shape, polya_.size()).first;
        polya_.emplace_back(PolyaParams{shape.first, shape.second, config_.polya_terms, config_.polya_tail_correction});
      }
      const auto k = static_cast<std::size_t>(i);
      row_polya_[k] = it->second;
      row_thin_[k] = config_.thin > 0 ? config_.thin : std::max(1, static_cast<int>(std::ceil(row_kappa_[i] - 1e-12)));
    }
  }

  void initialize() {
    const Eigen::Index n = data_.n();
    const Eigen::Index p = data_.p();
    state_.beta = Eigen::VectorXd::Zero(p);
    state_.nu = config_.prior.nu_mode == NuMode::fixed ? config_.prior.nu_fixed : 1.0;
    state_.lambda = Eigen::VectorXd::Ones(n);
    state_.omega = Eigen::VectorXd::Ones(p);
    state_.z.resize(0);
    if (config_.rep.is_cdf()) {
      state_.z.resize(n);
      const RngStream init = root_.substream(detail::kTagInit);
      for (Eigen::Index i = 0; i < n; ++i) {
        RngStream rng = init.substream(static_cast<std::uint64_t>(i));
        state_.z[i] = draw_z(0.0, 1.0, row_kappa_[i], rng);
      }
    }
  }

  void check_state() {
    if (state_.beta.size() != data_.p() || state_.lambda.size() != data_.n() || state_.omega.size() != data_.p()) {
      throw UsageError("initial chain state does not match the data dimensions");
    }
    if (config_.rep.is_cdf() && state_.z.size() != data_.n()) {
      state_.z = Eigen::VectorXd::Ones(data_.n());
    }
    if (config_.prior.nu_mode == NuMode::fixed) state_.nu = config_.prior.nu_fixed;
  }

  void sweep_impl(const RngStream& sweep, StageRecord& stats) {
    const auto& prior = config_.prior;
    const double kappa = config_.kappa;
    const Eigen::Index n = data_.n();
    const Eigen::Index p = data_.p();

    // 1. omega
    {
      RngStream rng = sweep.substream(detail::kTagOmega);
      for (Eigen::Index j = 0; j < p; ++j) {
        const auto& s = prior.sigma[static_cast<std::size_t>(j)];
        state_.omega[j] = (s && prior.alpha == 1) ? draw_omega(state_.beta[j], state_.nu, kappa, *s, rng) : 1.0;
      }
    }

    // 2-3. lambda (z integrated out), then z | lambda.
    const Eigen::VectorXd eta = data_.yX * state_.beta;
    accepted_.assign(static_cast<std::size_t>(n), 0);
    rejections_.assign(static_cast<std::size_t>(n), 0);
    const RngStream rows = sweep.substream(detail::kTagRows);
    const bool cdf = config_.rep.is_cdf();
    const bool slice = config_.lambda_method == LambdaMethod::slice;
    parallel_for(n, config_.threads, [&](Eigen::Index i) {
      const auto k = static_cast<std::size_t>(i);
      RngStream rng = rows.substream(static_cast<std::uint64_t>(i));
      const PolyaSampler& polya = polya_[row_polya_[k]];
      if (slice) {
        const auto out = slice_update_lambda(state_.lambda[i], eta[i], row_kappa_[i], config_.rep, polya, rng,
                                             config_.slice_cap);
        state_.lambda[i] = out.lambda;
        rejections_[k] = out.rejections;
      } else {
        const auto out = mh_update_lambda(state_.lambda[i], eta[i], row_kappa_[i], config_.rep, polya, row_thin_[k], rng);
        state_.lambda[i] = out.lambda;
        accepted_[k] = out.accepted;
      }
      if (cdf) state_.z[i] = draw_z(eta[i], state_.lambda[i], row_kappa_[i], rng);
    });
    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
      if (slice) {
        stats.slice_draws += 1;
        stats.slice_rejections += rejections_[k];
        stats.slice_max_rejections = std::max(stats.slice_max_rejections, rejections_[k]);
      } else {
        stats.mh_proposals += row_thin_[k];
        stats.mh_accepted += accepted_[k];
      }
    }

    // 4. beta
    {
      RngStream rng = sweep.substream(detail::kTagBeta);
      const Eigen::VectorXd prior_diag = prior_precision(state_.omega, state_.nu, kappa, prior.alpha, prior.sigma);
      const BetaSystem system(data_, state_.lambda, prior_diag, solver_path());
      const std::optional<Eigen::VectorXd> z = cdf ? std::optional<Eigen::VectorXd>(state_.z) : std::nullopt;
      state_.beta = system.draw(conditional_mean_rhs(data_, state_.lambda, z, config_.rep, row_kappa_), rng);
    }

    // 5. nu
    if (prior.nu_mode != NuMode::fixed && prior.penalty_active()) {
      RngStream rng = sweep.substream(detail::kTagNu);
      if (prior.nu_mode == NuMode::sample_nu && prior.alpha == 1) {
        state_.nu = draw_nu(state_.beta, kappa, prior, rng);
      } else {
        state_.nu = draw_nu_sq(state_.beta, state_.omega, kappa, prior, rng);
      }
    }
  }

  EncodedData data_;
  SamplerConfig config_;
  RngStream root_;
  std::uint64_t sweep_ = 0;
  ChainState state_;
  Eigen::VectorXd row_kappa_;
  std::vector<PolyaSampler> polya_;
  std::vector<std::size_t> row_polya_;
  std::vector<int> row_thin_;
  std::vector<int> accepted_;
  std::vector<std::int64_t> rejections_;
};

/// One sweep from `state`, with randomness derived from `rng`.
inline ChainState gibbs_step(const ChainState& state, const SamplerConfig& config, const EncodedData& data,
                             RngStream& rng) {
  GibbsSampler sampler(data, config, state);
  StageRecord stats;
  sampler.step_with(rng.substream(rng()), stats);
  return sampler.state();
}

inline Trace run_chain(const SamplerConfig& config, const EncodedData& data) {
  GibbsSampler sampler(data, config);
  Trace trace;
  sampler.run_stage(config.iterations, config.burn_in, trace);
  return trace;
}

namespace detail {

inline PointEstimate summarize_final_stage(const Trace& trace, const SamplerConfig& config) {
  PointEstimate est;
  est.beta = trace.kept_beta().colwise().mean().transpose();
  est.nu_fixed = config.prior.nu_mode == NuMode::fixed || !config.prior.penalty_active();
  est.nu = est.nu_fixed ? config.prior.nu_fixed : trace.kept_nu().mean();
  est.stages = trace.stages;
  return est;
}

}  // namespace detail

/// Posterior mean from a single kappa = 1 chain.
inline PointEstimate posterior_mean(const SamplerConfig& config, const EncodedData& data, Trace* trace_out = nullptr) {
  SamplerConfig cfg = config;
  cfg.kappa = 1.0;
  Trace trace = run_chain(cfg, data);
  PointEstimate est = detail::summarize_final_stage(trace, cfg);
  est.kind = EstimateKind::posterior_mean;
  est.schedule.stages = {{1.0, cfg.iterations, cfg.burn_in}};
  if (trace_out) *trace_out = std::move(trace);
  return est;
}

/// Runs the schedule stage by stage, each stage starting from the previous
/// stage's final state. The estimate is the last stage's post-burn-in mean.
inline AnnealResult anneal(const AnnealSchedule& schedule, const SamplerConfig& config, const EncodedData& data,
                           std::optional<ChainState> initial = std::nullopt) {
  schedule.validate();
  SamplerConfig cfg = config;
  cfg.kappa = schedule.stages.front().kappa;
  GibbsSampler sampler(data, cfg, std::move(initial));
  AnnealResult result;
  for (const auto& stage : schedule.stages) {
    sampler.set_kappa(stage.kappa);
    sampler.run_stage(stage.iterations, stage.burn_in, result.trace);
  }
  result.estimate = detail::summarize_final_stage(result.trace, sampler.config());
  result.estimate.kind = sampler.config().prior.penalty_active() ? EstimateKind::map : EstimateKind::mle;
  result.estimate.schedule = schedule;
  result.final_state = sampler.state();
  return result;
}

/// Stage 1: kappa = 1 chain with nu sampled; nu_hat is its posterior mean.
/// Stage 2: anneal with nu fixed at nu_hat, starting from the stage-1 state.
inline AnnealResult estimate_two_stage_nu(const AnnealSchedule& schedule, const SamplerConfig& config,
                                          const EncodedData& data) {
  if (config.prior.alpha != 1) throw UsageError("two-stage nu estimation is defined for the lasso prior");
  if (!config.prior.penalty_active()) throw UsageError("two-stage nu estimation needs penalized coordinates");
  SamplerConfig first = config;
  first.kappa = 1.0;
  if (first.prior.nu_mode == NuMode::fixed) first.prior.nu_mode = NuMode::sample_nu;
  GibbsSampler sampler(data, first);
  Trace nu_trace;
  sampler.run_stage(first.iterations, first.burn_in, nu_trace);
  const double nu_hat = nu_trace.kept_nu().mean();

  SamplerConfig second = config;
  second.prior.nu_mode = NuMode::fixed;
  second.prior.nu_fixed = nu_hat;
  second.seed = RngStream(config.seed).substream(0x2).stream_id();
  ChainState start = sampler.state();
  start.nu = nu_hat;
  AnnealResult result = anneal(schedule, second, data, std::move(start));
  result.nu_stage = std::move(nu_trace);
  return result;
}

}  // namespace powerlogit
