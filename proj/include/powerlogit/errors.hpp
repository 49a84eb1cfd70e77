#pragma once

#include <stdexcept>
#include <string>

namespace powerlogit {

// Every failure the library raises derives from Error. The category decides
// the process exit status used by the command-line front end.
enum class ErrorCategory { usage, ingestion, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorCategory::usage, what) {}
};

class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& what) : Error(ErrorCategory::ingestion, what) {}
};

// Parameter outside the support of a distribution or operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

// Polya mixing density with a nonpositive shape (psi_0 = a*b = 0).
class ImproperMixingError : public DomainError {
 public:
  explicit ImproperMixingError(const std::string& what) : DomainError(what) {}
};

class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

// The Woodbury path needs a strictly positive prior diagonal.
class SmwInapplicableError : public Error {
 public:
  explicit SmwInapplicableError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

class SamplerStallError : public Error {
 public:
  SamplerStallError(double eta, double kappa, long long iterations)
      : Error(ErrorCategory::numerical,
              "slice sampler exceeded " + std::to_string(iterations) +
                  " inner rejections (eta=" + std::to_string(eta) +
                  ", kappa=" + std::to_string(kappa) + ")"),
        eta_(eta),
        kappa_(kappa) {}
  double eta() const noexcept { return eta_; }
  double kappa() const noexcept { return kappa_; }

 private:
  double eta_;
  double kappa_;
};

}  // namespace powerlogit
