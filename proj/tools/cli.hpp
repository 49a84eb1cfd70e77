#pragma once

// Command-line front end. `run` is separate from main() so tests can drive
// commands in-process.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "powerlogit/experiments.hpp"
#include "powerlogit/powerlogit.hpp"

namespace powerlogit::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

inline int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::ingestion: return 3;
    case ErrorCategory::numerical: return 4;
  }
  return 4;
}

inline json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IngestionError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path.string() + "'");
  out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Options shared by fit and anneal.
struct ModelOptions {
  std::string data;
  std::string kind = "auto";
  std::string encoding = "multi";
  bool no_intercept = false;
  bool no_scale = false;
  double kappa = 1.0;
  int alpha = 1;
  std::string rep = "pdf";
  double a = 0.5;
  double r = 2.0;
  double d = 0.1;
  std::string nu = "sample";
  int iterations = 1000;
  int burn_in = 100;
  std::string method = "mh";
  int thin = 0;
  int polya_terms = 100;
  bool no_tail = false;
  std::uint64_t seed = 1;
  int threads = default_thread_count();
  std::string smw = "auto";
  std::vector<std::string> unpenalized{"intercept"};
  double sigma = 1.0;
  bool prior_only = false;
  std::string out = ".";
  std::string replay;
};

inline void add_model_options(CLI::App& cmd, ModelOptions& o) {
  cmd.add_option("--data", o.data, "CSV dataset (binary: y,x...; binomial: y,n,x...)");
  cmd.add_option("--kind", o.kind, "auto | binary | binomial")->check(CLI::IsMember({"auto", "binary", "binomial"}));
  cmd.add_option("--encoding", o.encoding, "binomial rows: multi | flat")->check(CLI::IsMember({"multi", "flat"}));
  cmd.add_flag("--no-intercept", o.no_intercept, "do not prepend an intercept column");
  cmd.add_flag("--no-scale", o.no_scale, "keep predictors in original units");
  cmd.add_option("--kappa", o.kappa, "multiplicity");
  cmd.add_option("--alpha", o.alpha, "1 = lasso, 2 = ridge")->check(CLI::IsMember({1, 2}));
  cmd.add_option("--rep", o.rep, "cdf | pdf")->check(CLI::IsMember({"cdf", "pdf"}));
  cmd.add_option("-a,--a", o.a, "pdf representation shape a (b = kappa - a)");
  cmd.add_option("--r", o.r, "inverse-gamma hyperprior shape");
  cmd.add_option("--d", o.d, "inverse-gamma hyperprior scale");
  cmd.add_option("--nu", o.nu, "sample | sample-sq | fixed:VALUE");
  cmd.add_option("--S", o.iterations, "sweeps including burn-in");
  cmd.add_option("--burn", o.burn_in, "burn-in sweeps");
  cmd.add_option("--method", o.method, "lambda update: mh | slice")->check(CLI::IsMember({"mh", "slice"}));
  cmd.add_option("--thin", o.thin, "MH steps per lambda update (0 = ceil(kappa_i))");
  cmd.add_option("--polya-terms", o.polya_terms, "Polya series truncation K");
  cmd.add_flag("--no-tail-correction", o.no_tail, "drop the exact tail mean of the Polya series");
  cmd.add_option("--seed", o.seed, "root seed");
  cmd.add_option("--threads", o.threads, "worker threads for latent updates (env POWERLOGIT_THREADS)");
  cmd.add_option("--smw", o.smw, "auto | always | never")->check(CLI::IsMember({"auto", "always", "never"}));
  cmd.add_option("--unpenalized", o.unpenalized, "unpenalized column names")->delimiter(',');
  cmd.add_option("--sigma", o.sigma, "penalty scale of penalized columns");
  cmd.add_flag("--prior-only", o.prior_only, "allow an empty dataset");
  cmd.add_option("--out", o.out, "output directory");
  cmd.add_option("--replay", o.replay, "re-run the command recorded in a manifest");
}

struct LoadedData {
  Dataset dataset;
  EncodedData encoded;
  const Design* design = nullptr;
  std::string kind;
};

inline DatasetKind detect_kind(const RawTable& table, const std::string& requested) {
  if (requested == "binary") return DatasetKind::binary;
  if (requested == "binomial") return DatasetKind::binomial;
  return table.header.size() >= 2 && table.header[1] == "n" ? DatasetKind::binomial : DatasetKind::binary;
}

inline LoadedData load_data(const ModelOptions& o) {
  if (o.data.empty()) throw UsageError("--data is required");
  const RawTable table = read_csv(o.data);
  LoadOptions lo;
  lo.kind = detect_kind(table, o.kind);
  lo.intercept = !o.no_intercept;
  lo.scale = !o.no_scale;
  LoadedData out{load_and_scale(table, lo), {}, nullptr, {}};
  if (auto* b = std::get_if<BinaryDataset>(&out.dataset)) {
    out.encoded = encode(*b);
    out.design = &b->design;
    out.kind = "binary";
  } else {
    auto& m = std::get<BinomialDataset>(out.dataset);
    out.encoded = o.encoding == "flat" ? flatten(m) : multiplicity_encode(m);
    out.design = &m.design;
    out.kind = "binomial";
  }
  return out;
}

inline void parse_nu(const std::string& text, PriorSpec& prior) {
  if (text == "sample") {
    prior.nu_mode = NuMode::sample_nu;
  } else if (text == "sample-sq") {
    prior.nu_mode = NuMode::sample_nu_sq;
  } else if (text.rfind("fixed:", 0) == 0) {
    prior.nu_mode = NuMode::fixed;
    try {
      prior.nu_fixed = std::stod(text.substr(6));
    } catch (const std::exception&) {
      throw UsageError("bad --nu value '" + text + "'");
    }
  } else {
    throw UsageError("--nu must be sample, sample-sq or fixed:VALUE");
  }
}

inline SamplerConfig make_config(const ModelOptions& o, const Design& design, bool mle) {
  SamplerConfig c;
  c.kappa = o.kappa;
  c.rep = o.rep == "cdf" ? Representation::cdf() : Representation::pdf(o.a);
  c.prior.alpha = o.alpha;
  c.prior.r = o.r;
  c.prior.d = o.d;
  parse_nu(o.nu, c.prior);
  c.lambda_method = o.method == "slice" ? LambdaMethod::slice : LambdaMethod::mh;
  c.iterations = o.iterations;
  c.burn_in = o.burn_in;
  c.polya_terms = o.polya_terms;
  c.polya_tail_correction = !o.no_tail;
  c.thin = o.thin;
  c.seed = o.seed;
  c.threads = o.threads;
  c.smw = o.smw == "always" ? SmwMode::always : o.smw == "never" ? SmwMode::never : SmwMode::automatic;
  c.allow_prior_only = o.prior_only;
  c.prior.sigma.assign(static_cast<std::size_t>(design.p()), o.sigma);
  if (!(o.sigma > 0.0)) throw UsageError("--sigma must be positive");
  for (const auto& name : o.unpenalized) {
    if (name.empty()) continue;
    const auto it = std::find(design.names.begin(), design.names.end(), name);
    if (it == design.names.end()) {
      if (name == "intercept") continue;
      throw UsageError("--unpenalized names unknown column '" + name + "'");
    }
    c.prior.sigma[static_cast<std::size_t>(it - design.names.begin())] = kUnpenalized;
  }
  if (mle) std::fill(c.prior.sigma.begin(), c.prior.sigma.end(), kUnpenalized);
  if (c.iterations <= c.burn_in || c.burn_in < 0) throw UsageError("--S must exceed --burn");
  return c;
}

inline json config_echo(const SamplerConfig& c) {
  json sigma = json::array();
  for (const auto& s : c.prior.sigma) sigma.push_back(s ? json(*s) : json(nullptr));
  const char* nu_mode = c.prior.nu_mode == NuMode::fixed       ? "fixed"
                        : c.prior.nu_mode == NuMode::sample_nu ? "sample"
                                                               : "sample-sq";
  return {{"kappa", c.kappa},
          {"representation", to_string(c.rep.kind)},
          {"a", c.rep.a},
          {"alpha", c.prior.alpha},
          {"r", c.prior.r},
          {"d", c.prior.d},
          {"nu_mode", nu_mode},
          {"nu_fixed", c.prior.nu_fixed},
          {"sigma", sigma},
          {"lambda_method", to_string(c.lambda_method)},
          {"iterations", c.iterations},
          {"burn_in", c.burn_in},
          {"polya_terms", c.polya_terms},
          {"polya_tail_correction", c.polya_tail_correction},
          {"thin", c.thin},
          {"seed", c.seed},
          {"threads", c.threads}};
}

inline json fingerprint_json(const DatasetFingerprint& f) {
  return {{"rows", f.rows}, {"columns", f.columns}, {"column_norms", to_json(f.column_norms)}};
}

inline json design_json(const Design& d) {
  return {{"names", d.names}, {"column_scales", to_json(d.column_scales)}, {"intercept", d.intercept}};
}

inline json stage_json(const StageRecord& s) {
  return {{"kappa", s.kappa},
          {"iterations", s.iterations},
          {"burn_in", s.burn_in},
          {"seconds", s.seconds},
          {"mh_proposals", s.mh_proposals},
          {"mh_accepted", s.mh_accepted},
          {"mh_acceptance_rate", s.mh_acceptance_rate()},
          {"slice_draws", s.slice_draws},
          {"slice_rejections", s.slice_rejections},
          {"slice_max_rejections", s.slice_max_rejections},
          {"solver", s.solver == SolverPath::woodbury ? "woodbury" : "direct"}};
}

/// Kept samples, one row each: scaled coefficients then nu.
inline std::string trace_csv(const Eigen::MatrixXd& beta, const Eigen::VectorXd& nu,
                             const std::vector<std::string>& names) {
  std::ostringstream out;
  for (const auto& n : names) out << n << ',';
  out << "nu\n";
  for (Eigen::Index s = 0; s < beta.rows(); ++s) {
    for (Eigen::Index j = 0; j < beta.cols(); ++j) out << format_double(beta(s, j)) << ',';
    out << format_double(nu[s]) << '\n';
  }
  return out.str();
}

struct Invocation {
  std::string command;
  std::vector<std::string> args;  // everything after the command name
};

inline json manifest_json(const Invocation& inv, const SamplerConfig& c, const LoadedData& data, double seconds,
                          const std::vector<std::string>& outputs) {
  std::vector<std::string> replay_args;
  for (std::size_t i = 0; i < inv.args.size(); ++i) {
    if (inv.args[i] == "--out" || inv.args[i] == "--replay") {
      ++i;
      continue;
    }
    if (inv.args[i].rfind("--out=", 0) == 0 || inv.args[i].rfind("--replay=", 0) == 0) continue;
    replay_args.push_back(inv.args[i]);
  }
  return {{"command", inv.command},
          {"args", replay_args},
          {"config", config_echo(c)},
          {"dataset", {{"kind", data.kind}, {"fingerprint", fingerprint_json(data.design->fingerprint)}}},
          {"seed", c.seed},
          {"version", kVersion},
          {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
          {"seconds", seconds},
          {"outputs", outputs}};
}

inline void check_fingerprint(const json& expected, const LoadedData& data) {
  if (expected.is_null()) return;
  const json actual = fingerprint_json(data.design->fingerprint);
  if (expected.at("rows") != actual.at("rows") || expected.at("columns") != actual.at("columns")) {
    throw IngestionError("dataset does not match the manifest fingerprint");
  }
  const Eigen::VectorXd a = vector_from_json(actual.at("column_norms"));
  const Eigen::VectorXd e = vector_from_json(expected.at("column_norms"));
  if ((a - e).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + e.cwiseAbs().maxCoeff())) {
    throw IngestionError("dataset does not match the manifest fingerprint");
  }
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  json expected_fingerprint;  // set when replaying
};

inline int cmd_fit(const ModelOptions& o, const Invocation& inv, Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedData data = load_data(o);
  check_fingerprint(ctx.expected_fingerprint, data);
  const SamplerConfig config = make_config(o, *data.design, false);
  const Trace trace = run_chain(config, data.encoded);
  const Design& design = *data.design;

  const Eigen::MatrixXd kept = trace.kept_beta();
  const Eigen::VectorXd kept_nu = trace.kept_nu();
  const Eigen::VectorXd mean = kept.colwise().mean().transpose();
  const Eigen::VectorXd sd =
      ((kept.rowwise() - mean.transpose()).colwise().squaredNorm() / std::max<double>(1.0, kept.rows() - 1.0))
          .cwiseSqrt()
          .transpose();
  const ChainDiagnostics diag = diagnose(trace);
  json ess = json::array();
  json degenerate = json::array();
  for (const auto& e : diag.ess) {
    ess.push_back(e.value);
    degenerate.push_back(e.degenerate);
  }
  const StageRecord& stage = trace.stages.back();
  json summary = design_json(design);
  summary["kind"] = to_string(EstimateKind::posterior_mean);
  summary["beta_mean"] = to_json(mean);
  summary["beta_sd"] = to_json(sd);
  summary["beta_mean_original"] = to_json(design.to_original_units(mean));
  summary["beta_sd_original"] = to_json(design.to_original_units(sd));
  summary["ess"] = ess;
  summary["ess_degenerate"] = degenerate;
  summary["nu_mean"] = kept_nu.mean();
  summary["nu_sd"] = std::sqrt((kept_nu.array() - kept_nu.mean()).square().sum() /
                               std::max<double>(1.0, static_cast<double>(kept_nu.size()) - 1.0));
  summary["acceptance_rates"] = diag.acceptance_rates;
  summary["stages"] = json::array({stage_json(stage)});
  summary["kept_samples"] = kept.rows();

  const std::filesystem::path dir(o.out);
  write_text(dir / "trace.csv", trace_csv(kept, kept_nu, design.names));
  write_json(dir / "summary.json", summary);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(dir / "manifest.json",
             manifest_json(inv, config, data, seconds,
                           {(dir / "trace.csv").string(), (dir / "summary.json").string(),
                            (dir / "manifest.json").string()}));
  ctx.out << "fit: " << kept.rows() << " kept samples, " << stage.seconds << " s\n";
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    ctx.out << "  " << std::setw(16) << std::left << design.names[static_cast<std::size_t>(j)] << std::right
            << std::setw(12) << mean[j] << " (sd " << sd[j] << ", ess " << diag.ess[static_cast<std::size_t>(j)].value
            << ")\n";
  }
  return 0;
}

struct AnnealOptions {
  std::string schedule = "1:500,5:500,10:500,20:500";
  bool mle = false;
  bool two_stage_nu = false;
  bool write_trace = false;
};

inline int cmd_anneal(const ModelOptions& o, const AnnealOptions& a, const Invocation& inv, Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const AnnealSchedule schedule = AnnealSchedule::parse(a.schedule, o.burn_in);
  const LoadedData data = load_data(o);
  check_fingerprint(ctx.expected_fingerprint, data);
  const SamplerConfig config = make_config(o, *data.design, a.mle);
  if (a.two_stage_nu && a.mle) throw UsageError("--two-stage-nu and --mle are exclusive");
  const AnnealResult result =
      a.two_stage_nu ? estimate_two_stage_nu(schedule, config, data.encoded) : anneal(schedule, config, data.encoded);
  const Design& design = *data.design;
  const PointEstimate& est = result.estimate;

  json stages = json::array();
  for (const auto& s : est.stages) stages.push_back(stage_json(s));
  json estimate = design_json(design);
  estimate["kind"] = to_string(est.kind);
  estimate["beta"] = to_json(est.beta);
  estimate["beta_original"] = to_json(design.to_original_units(est.beta));
  estimate["nu"] = est.nu;
  estimate["nu_fixed"] = est.nu_fixed;
  estimate["schedule"] = schedule.to_string();
  estimate["stages"] = stages;
  if (result.nu_stage) estimate["nu_stage"] = stage_json(result.nu_stage->stages.back());

  const std::filesystem::path dir(o.out);
  std::vector<std::string> outputs{(dir / "estimate.json").string(), (dir / "manifest.json").string()};
  write_json(dir / "estimate.json", estimate);
  if (a.write_trace) {
    write_text(dir / "trace.csv", trace_csv(result.trace.kept_beta(), result.trace.kept_nu(), design.names));
    outputs.push_back((dir / "trace.csv").string());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest = manifest_json(inv, config, data, seconds, outputs);
  manifest["schedule"] = schedule.to_string();
  write_json(dir / "manifest.json", manifest);
  ctx.out << "anneal (" << to_string(est.kind) << "), nu = " << est.nu << "\n";
  for (Eigen::Index j = 0; j < est.beta.size(); ++j) {
    ctx.out << "  " << std::setw(16) << std::left << design.names[static_cast<std::size_t>(j)] << std::right
            << std::setw(12) << est.beta[j] << "\n";
  }
  return 0;
}

/// Reads a trace CSV written by fit/anneal: coefficient columns then nu.
inline std::pair<std::vector<std::string>, Eigen::MatrixXd> read_trace(const std::string& path) {
  const RawTable t = read_csv(path);
  if (t.header.empty() || t.header.back() != "nu") throw IngestionError("'" + path + "' is not a trace file");
  std::vector<std::string> names(t.header.begin(), t.header.end() - 1);
  return {names, t.values.leftCols(t.values.cols() - 1)};
}

struct PredictOptions {
  std::string model;
  std::string trace;
  std::string data;
  std::string truth;
  std::string truth_prob;
  std::string out = "predictions.csv";
  double threshold = 0.5;
};

inline int cmd_predict(const PredictOptions& o, Context& ctx) {
  if (o.model.empty()) throw UsageError("--model (summary.json or estimate.json) is required");
  if (o.data.empty()) throw UsageError("--data is required");
  const json model = read_json(o.model);
  std::vector<std::string> names;
  Eigen::VectorXd scales;
  bool intercept = false;
  try {
    names = model.at("names").get<std::vector<std::string>>();
    scales = vector_from_json(model.at("column_scales"));
    intercept = model.at("intercept").get<bool>();
  } catch (const json::exception&) {
    throw IngestionError("'" + o.model + "' lacks names / column_scales / intercept");
  }
  const RawTable table = read_csv(o.data);
  const auto offset = static_cast<std::size_t>(intercept ? 1 : 0);
  Eigen::MatrixXd raw(table.values.rows(), static_cast<Eigen::Index>(names.size() - offset));
  for (std::size_t j = offset; j < names.size(); ++j) {
    const Eigen::Index col = table.column_index(names[j]);
    if (col < 0) throw IngestionError("feature file lacks column '" + names[j] + "'");
    raw.col(static_cast<Eigen::Index>(j - offset)) = table.values.col(col);
  }
  Design design;
  design.intercept = intercept;
  design.column_scales = scales;
  design.names = names;
  design.X.resize(0, static_cast<Eigen::Index>(names.size()));
  const Eigen::MatrixXd x = design.scale_rows(raw);

  Eigen::VectorXd prob;
  if (!o.trace.empty()) {
    const auto [trace_names, samples] = read_trace(o.trace);
    if (trace_names != names) throw IngestionError("trace columns do not match the model");
    prob = predict(samples, x);
  } else {
    const char* key = model.contains("beta") ? "beta" : "beta_mean";
    if (!model.contains(key)) throw IngestionError("'" + o.model + "' holds no coefficients");
    prob = predict(vector_from_json(model.at(key)), x);
  }

  std::ostringstream csv;
  csv << "probability,class\n";
  for (Eigen::Index i = 0; i < prob.size(); ++i) {
    csv << format_double(prob[i]) << ',' << (prob[i] >= o.threshold ? 1 : -1) << '\n';
  }
  write_text(o.out, csv.str());

  json metrics;
  if (!o.truth.empty()) {
    const Eigen::Index col = table.column_index(o.truth);
    if (col < 0) throw IngestionError("feature file lacks truth column '" + o.truth + "'");
    const Eigen::VectorXd labels = table.values.col(col);
    const Eigen::VectorXd as_prob = (labels.array() > 0.0).cast<double>();
    metrics["misclassification_rate"] = misclassification_rate(labels, prob, o.threshold);
    metrics["ell_labels"] = expected_log_likelihood(as_prob, prob);
  }
  if (!o.truth_prob.empty()) {
    const Eigen::Index col = table.column_index(o.truth_prob);
    if (col < 0) throw IngestionError("feature file lacks truth column '" + o.truth_prob + "'");
    metrics["ell"] = expected_log_likelihood(table.values.col(col), prob);
  }
  ctx.out << "predict: " << prob.size() << " rows -> " << o.out << "\n";
  if (!metrics.is_null()) {
    write_json(o.out + ".metrics.json", metrics);
    ctx.out << metrics.dump(2) << "\n";
  }
  return 0;
}

inline int cmd_diagnose(const std::string& trace_path, int burn, Context& ctx) {
  const auto [names, samples] = read_trace(trace_path);
  if (burn < 0 || burn >= samples.rows()) throw UsageError("--burn must leave samples");
  const Eigen::MatrixXd kept = samples.bottomRows(samples.rows() - burn);
  json report = json::array();
  for (Eigen::Index j = 0; j < kept.cols(); ++j) {
    const EssResult ess = effective_sample_size(kept.col(j));
    report.push_back({{"name", names[static_cast<std::size_t>(j)]},
                      {"mean", kept.col(j).mean()},
                      {"ess", ess.value},
                      {"degenerate", ess.degenerate}});
  }
  ctx.out << json({{"samples", kept.rows()}, {"coordinates", report}}).dump(2) << "\n";
  return 0;
}

inline int cmd_bench_binomial(const BinomialBenchOptions& o, const std::string& out_path, Context& ctx) {
  const auto cells = run_binomial_bench(o);
  json report = json::array();
  ctx.out << "rep  encoding  RMSE mean (sd)      seconds mean (sd)\n";
  for (const auto& c : cells) {
    ctx.out << std::setw(3) << to_string(c.rep) << "  " << std::setw(8) << to_string(c.encoding) << "  "
            << std::fixed << std::setprecision(4) << mean_of(c.rmse) << " (" << sd_of(c.rmse) << ")   "
            << mean_of(c.seconds) << " (" << sd_of(c.seconds) << ")\n";
    report.push_back({{"representation", to_string(c.rep)},
                      {"encoding", to_string(c.encoding)},
                      {"rmse", c.rmse},
                      {"seconds", c.seconds}});
  }
  ctx.out.unsetf(std::ios::fixed);
  if (!out_path.empty()) write_json(out_path, report);
  return 0;
}

inline int cmd_bench_pggn(const PggnOptions& o, const std::string& out_path, Context& ctx) {
  const PggnResult r = run_pggn(o);
  ctx.out << "p=" << o.p << ", " << o.repetitions << " repetitions\n";
  ctx.out << "  posterior mean: ELL " << mean_of(r.ell_mean) << ", miss " << mean_of(r.miss_mean) << "\n";
  ctx.out << "  kappa=" << o.map_kappa << ":      ELL " << mean_of(r.ell_map) << ", miss " << mean_of(r.miss_map)
          << "\n";
  if (!out_path.empty()) {
    write_json(out_path, {{"p", o.p},
                          {"ell_mean", r.ell_mean},
                          {"miss_mean", r.miss_mean},
                          {"ell_map", r.ell_map},
                          {"miss_map", r.miss_map}});
  }
  return 0;
}

/// Replaces the arguments with those stored in a manifest when --replay is given.
inline Invocation resolve_replay(Invocation inv, Context& ctx) {
  std::string manifest_path;
  std::string out_override;
  for (std::size_t i = 0; i < inv.args.size(); ++i) {
    if (inv.args[i] == "--replay" && i + 1 < inv.args.size()) manifest_path = inv.args[i + 1];
    if (inv.args[i].rfind("--replay=", 0) == 0) manifest_path = inv.args[i].substr(9);
    if (inv.args[i] == "--out" && i + 1 < inv.args.size()) out_override = inv.args[i + 1];
    if (inv.args[i].rfind("--out=", 0) == 0) out_override = inv.args[i].substr(6);
  }
  if (manifest_path.empty()) return inv;
  const json manifest = read_json(manifest_path);
  if (manifest.value("command", "") != inv.command) {
    throw UsageError("manifest records command '" + manifest.value("command", "") + "', not '" + inv.command + "'");
  }
  Invocation replay{inv.command, manifest.at("args").get<std::vector<std::string>>()};
  if (!out_override.empty()) {
    replay.args.push_back("--out");
    replay.args.push_back(out_override);
  }
  ctx.expected_fingerprint = manifest.at("dataset").at("fingerprint");
  return replay;
}

inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Context ctx{out, err, nullptr};
  CLI::App app{"Simulation-based regularized logistic regression"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  ModelOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "sample the power posterior at a fixed kappa");
  add_model_options(*fit, fit_opts);

  ModelOptions anneal_opts;
  AnnealOptions anneal_extra;
  auto* ann = app.add_subcommand("anneal", "MAP / MLE estimate by annealing over kappa");
  add_model_options(*ann, anneal_opts);
  ann->add_option("--schedule", anneal_extra.schedule, "kappa:iterations[:burn],...");
  ann->add_flag("--mle", anneal_extra.mle, "disable the penalty on every coordinate");
  ann->add_flag("--two-stage-nu", anneal_extra.two_stage_nu, "fix nu at its kappa=1 posterior mean first");
  ann->add_flag("--trace", anneal_extra.write_trace, "also write the final stage's kept samples");

  PredictOptions pred_opts;
  auto* pred = app.add_subcommand("predict", "probabilities from an estimate or a trace");
  pred->add_option("--model", pred_opts.model, "summary.json or estimate.json");
  pred->add_option("--trace", pred_opts.trace, "trace.csv; averages over its rows");
  pred->add_option("--data", pred_opts.data, "feature CSV with the model's column names");
  pred->add_option("--truth", pred_opts.truth, "label column for metrics");
  pred->add_option("--truth-prob", pred_opts.truth_prob, "true-probability column for ELL");
  pred->add_option("--threshold", pred_opts.threshold, "class threshold (ties go to +1)");
  pred->add_option("--out", pred_opts.out, "predictions CSV");

  std::string diag_trace;
  int diag_burn = 0;
  auto* diag = app.add_subcommand("diagnose", "effective sample sizes of a trace");
  diag->add_option("--trace", diag_trace, "trace CSV")->required();
  diag->add_option("--burn", diag_burn, "leading rows to drop");

  BinomialBenchOptions bench_opts;
  bench_opts.threads = default_thread_count();
  std::string bench_out;
  auto* bench = app.add_subcommand("bench-binomial", "flattened vs multiplicity binomial study");
  bench->add_option("--reps", bench_opts.repetitions, "repetitions");
  bench->add_option("--rows", bench_opts.rows, "distinct predictor locations m");
  bench->add_option("--trials", bench_opts.trials, "trials per location");
  bench->add_option("--S", bench_opts.iterations, "sweeps");
  bench->add_option("--burn", bench_opts.burn_in, "burn-in");
  bench->add_option("--seed", bench_opts.seed, "root seed");
  bench->add_option("--threads", bench_opts.threads, "worker threads");
  bench->add_option("--json", bench_out, "write the raw results");

  PggnOptions pggn_opts;
  pggn_opts.threads = default_thread_count();
  std::string pggn_out;
  auto* pggn = app.add_subcommand("bench-pggn", "p >> n predictive study (ELL, misclassification)");
  pggn->add_option("--p", pggn_opts.p, "number of predictors");
  pggn->add_option("--reps", pggn_opts.repetitions, "repetitions");
  pggn->add_option("--S", pggn_opts.iterations, "kappa=1 sweeps");
  pggn->add_option("--burn", pggn_opts.burn_in, "kappa=1 burn-in");
  pggn->add_option("--seed", pggn_opts.seed, "root seed");
  pggn->add_option("--threads", pggn_opts.threads, "worker threads");
  pggn->add_option("--json", pggn_out, "write the raw results");

  try {
    Invocation inv;
    if (argv.size() > 1) {
      inv.command = argv[1];
      inv.args.assign(argv.begin() + 2, argv.end());
    }
    inv = resolve_replay(inv, ctx);
    std::vector<std::string> args;
    args.push_back(inv.command);
    args.insert(args.end(), inv.args.begin(), inv.args.end());
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForVersion&) {
      out << kVersion << "\n";
      return 0;
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        out << app.help();
        return 0;
      }
      err << "error: " << e.what() << "\n";
      return 2;
    }
    if (fit->parsed()) {
      if (fit_opts.threads < 1) throw UsageError("--threads must be at least 1");
      return cmd_fit(fit_opts, inv, ctx);
    }
    if (ann->parsed()) return cmd_anneal(anneal_opts, anneal_extra, inv, ctx);
    if (pred->parsed()) return cmd_predict(pred_opts, ctx);
    if (diag->parsed()) return cmd_diagnose(diag_trace, diag_burn, ctx);
    if (bench->parsed()) return cmd_bench_binomial(bench_opts, bench_out, ctx);
    if (pggn->parsed()) return cmd_bench_pggn(pggn_opts, pggn_out, ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}

}  // namespace powerlogit::cli
