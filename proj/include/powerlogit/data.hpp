#pragma once

// Dataset ingestion, predictor scaling and the encodings seen by the sampler.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "powerlogit/errors.hpp"
#include "powerlogit/math.hpp"

namespace powerlogit {

/// Numeric CSV with a header row.
struct RawTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  Eigen::Index column_index(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<Eigen::Index>(j);
    }
    return -1;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline RawTable parse_csv(std::istream& in) {
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    for (const auto& field : detail::split_commas(line)) table.header.emplace_back(field);
    break;
  }
  if (table.header.empty()) throw IngestionError("CSV input is empty (header row required)");
  const std::size_t cols = table.header.size();
  std::vector<double> cells;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_commas(line);
    if (fields.size() != cols) {
      throw IngestionError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                           " fields, found " + std::to_string(fields.size()));
    }
    for (const auto f : fields) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw IngestionError("line " + std::to_string(line_no) + ": non-numeric value '" + std::string(f) + "'");
      }
      cells.push_back(v);
    }
    ++rows;
  }
  table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cells[i * cols + j];
    }
  }
  return table;
}

inline RawTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

inline RawTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open data file '" + path + "'");
  return parse_csv(in);
}

/// Row/column counts and raw column norms, echoed into run metadata.
struct DatasetFingerprint {
  Eigen::Index rows = 0;
  Eigen::Index columns = 0;
  Eigen::VectorXd column_norms;
};

/// Scaled design. Column j of the raw predictors equals column_scales[j]
/// times column j of X; the optional leading intercept column has scale 1.
struct Design {
  Eigen::MatrixXd X;
  bool intercept = false;
  Eigen::VectorXd column_scales;
  std::vector<std::string> names;
  DatasetFingerprint fingerprint;

  Eigen::Index p() const { return X.cols(); }

  /// beta in original predictor units.
  Eigen::VectorXd to_original_units(const Eigen::VectorXd& beta_scaled) const {
    return beta_scaled.cwiseQuotient(column_scales);
  }

  /// Apply the stored scaling (and intercept) to raw predictor rows.
  Eigen::MatrixXd scale_rows(const Eigen::MatrixXd& raw) const {
    const Eigen::Index offset = intercept ? 1 : 0;
    if (raw.cols() + offset != X.cols()) {
      throw UsageError("feature count mismatch: expected " + std::to_string(X.cols() - offset) + " columns, got " +
                       std::to_string(raw.cols()));
    }
    Eigen::MatrixXd out(raw.rows(), X.cols());
    if (intercept) out.col(0).setOnes();
    for (Eigen::Index j = 0; j < raw.cols(); ++j) out.col(j + offset) = raw.col(j) / column_scales[j + offset];
    return out;
  }
};

struct BinaryDataset {
  Design design;
  Eigen::VectorXd y;  // +-1 labels
};

struct BinomialDataset {
  Design design;
  Eigen::VectorXd successes;
  Eigen::VectorXd trials;
};

enum class DatasetKind { binary, binomial };

struct LoadOptions {
  DatasetKind kind = DatasetKind::binary;
  bool intercept = true;
  bool scale = true;
};

/// Build a scaled design from raw predictors. Each non-intercept column is
/// scaled to unit L2 norm unless `scale` is false.
inline Design make_design(const Eigen::MatrixXd& raw, std::vector<std::string> names, bool intercept, bool scale) {
  Design d;
  d.intercept = intercept;
  const Eigen::Index offset = intercept ? 1 : 0;
  d.X.resize(raw.rows(), raw.cols() + offset);
  d.column_scales = Eigen::VectorXd::Ones(raw.cols() + offset);
  d.fingerprint.rows = raw.rows();
  d.fingerprint.columns = raw.cols();
  d.fingerprint.column_norms = raw.colwise().norm().transpose();
  if (intercept) {
    d.X.col(0).setOnes();
    d.names.emplace_back("intercept");
  }
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double norm = d.fingerprint.column_norms[j];
    const std::string name = static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                                         : "x" + std::to_string(j + 1);
    if (!(norm > 0.0)) throw IngestionError("predictor column '" + name + "' is identically zero");
    const double s = scale ? norm : 1.0;
    d.column_scales[j + offset] = s;
    d.X.col(j + offset) = raw.col(j) / s;
    d.names.push_back(name);
  }
  return d;
}

inline BinaryDataset load_binary(const RawTable& table, const LoadOptions& opts = {}) {
  if (table.values.cols() < 2 || table.header.empty() || table.header[0] != "y") {
    throw IngestionError("binary schema requires a leading 'y' column followed by predictors");
  }
  BinaryDataset ds;
  const Eigen::VectorXd labels = table.values.col(0);
  const bool has_minus = (labels.array() == -1.0).any();
  ds.y.resize(labels.size());
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const double v = labels[i];
    if (v == 1.0) {
      ds.y[i] = 1.0;
    } else if ((has_minus && v == -1.0) || (!has_minus && v == 0.0)) {
      ds.y[i] = -1.0;
    } else {
      throw IngestionError("row " + std::to_string(i + 1) + ": label must be in {-1,+1} or {0,1}");
    }
  }
  std::vector<std::string> names(table.header.begin() + 1, table.header.end());
  ds.design = make_design(table.values.rightCols(table.values.cols() - 1), names, opts.intercept, opts.scale);
  return ds;
}

inline BinomialDataset load_binomial(const RawTable& table, const LoadOptions& opts = {}) {
  if (table.values.cols() < 3 || table.header.size() < 3 || table.header[0] != "y" || table.header[1] != "n") {
    throw IngestionError("binomial schema requires leading 'y' and 'n' columns followed by predictors");
  }
  BinomialDataset ds;
  ds.successes = table.values.col(0);
  ds.trials = table.values.col(1);
  for (Eigen::Index i = 0; i < ds.trials.size(); ++i) {
    const double y = ds.successes[i];
    const double n = ds.trials[i];
    const std::string where = "row " + std::to_string(i + 1) + ": ";
    if (n != std::floor(n) || y != std::floor(y)) throw IngestionError(where + "counts must be integers");
    if (n < 1.0) throw IngestionError(where + "zero-trial rows are not allowed");
    if (y < 0.0 || y > n) throw IngestionError(where + "successes must lie in [0, n]");
  }
  std::vector<std::string> names(table.header.begin() + 2, table.header.end());
  ds.design = make_design(table.values.rightCols(table.values.cols() - 2), names, opts.intercept, opts.scale);
  return ds;
}

using Dataset = std::variant<BinaryDataset, BinomialDataset>;

inline Dataset load_and_scale(const RawTable& table, const LoadOptions& opts = {}) {
  if (opts.kind == DatasetKind::binomial) return load_binomial(table, opts);
  return load_binary(table, opts);
}

/// Response-multiplied design with per-row multiplicities. The sampler uses
/// config.kappa * kappa[i] as the multiplicity of row i, so encodings are
/// normally built with the default kappa = 1.
struct EncodedData {
  Eigen::MatrixXd yX;
  Eigen::VectorXd kappa;

  Eigen::Index n() const { return yX.rows(); }
  Eigen::Index p() const { return yX.cols(); }
};

inline EncodedData encode(const BinaryDataset& ds, double kappa = 1.0) {
  EncodedData e;
  e.yX = ds.design.X.array().colwise() * ds.y.array();
  e.kappa = Eigen::VectorXd::Constant(ds.y.size(), kappa);
  return e;
}

/// Expand each binomial row into n_i binary rows (y_i positive, n_i - y_i negative).
inline EncodedData flatten(const BinomialDataset& ds, double kappa = 1.0) {
  const auto total = static_cast<Eigen::Index>(ds.trials.sum());
  EncodedData e;
  e.yX.resize(total, ds.design.p());
  e.kappa = Eigen::VectorXd::Constant(total, kappa);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < ds.trials.size(); ++i) {
    const auto n = static_cast<Eigen::Index>(ds.trials[i]);
    const auto y = static_cast<Eigen::Index>(ds.successes[i]);
    for (Eigen::Index k = 0; k < n; ++k) {
      e.yX.row(row++) = (k < y ? 1.0 : -1.0) * ds.design.X.row(i);
    }
  }
  return e;
}

/// Two signed rows per subject with multiplicities kappa*y_i and
/// kappa*(n_i - y_i); rows with zero multiplicity are dropped.
inline EncodedData multiplicity_encode(const BinomialDataset& ds, double kappa = 1.0) {
  std::vector<Eigen::Index> source;
  std::vector<double> sign;
  std::vector<double> mult;
  for (Eigen::Index i = 0; i < ds.trials.size(); ++i) {
    if (ds.successes[i] > 0.0) {
      source.push_back(i);
      sign.push_back(1.0);
      mult.push_back(kappa * ds.successes[i]);
    }
  }
  for (Eigen::Index i = 0; i < ds.trials.size(); ++i) {
    const double failures = ds.trials[i] - ds.successes[i];
    if (failures > 0.0) {
      source.push_back(i);
      sign.push_back(-1.0);
      mult.push_back(kappa * failures);
    }
  }
  EncodedData e;
  const auto rows = static_cast<Eigen::Index>(source.size());
  e.yX.resize(rows, ds.design.p());
  e.kappa.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto k = static_cast<std::size_t>(r);
    e.yX.row(r) = sign[k] * ds.design.X.row(source[k]);
    e.kappa[r] = mult[k];
  }
  return e;
}

/// sum_i kappa_i log(1 + exp(-yX_i beta)), the negative powered log-likelihood.
inline double powered_neg_log_likelihood(const EncodedData& data, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = data.yX * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) total += data.kappa[i] * math::log1pexp(-eta[i]);
  return total;
}

/// Raw predictors augmented with all pairwise products x_j * x_k (j < k).
inline Eigen::MatrixXd pairwise_interactions(const Eigen::MatrixXd& raw, std::vector<std::string>* names = nullptr) {
  const Eigen::Index p = raw.cols();
  Eigen::MatrixXd out(raw.rows(), p + p * (p - 1) / 2);
  out.leftCols(p) = raw;
  Eigen::Index col = p;
  std::vector<std::string> base = names ? *names : std::vector<std::string>{};
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j + 1; k < p; ++k) {
      out.col(col++) = raw.col(j).cwiseProduct(raw.col(k));
      if (names && static_cast<std::size_t>(p) <= base.size()) {
        names->push_back(base[static_cast<std::size_t>(j)] + ":" + base[static_cast<std::size_t>(k)]);
      }
    }
  }
  return out;
}

}  // namespace powerlogit
