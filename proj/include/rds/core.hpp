#ifndef RDS_CORE_HPP
#define RDS_CORE_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rds {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ErrorKind {
  Config,
  Window,
  Domain,
  NonHyperbolic,
  Integration,
  Contraction,
  Threshold,
  Isomorphism,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};

// Carries how much longer the window would need to be, when known.
struct WindowError : Error {
  explicit WindowError(const std::string& w, double missing = 0.0)
      : Error(ErrorKind::Window, w), missing_length(missing) {}
  double missing_length;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};

struct NonHyperbolicError : Error {
  explicit NonHyperbolicError(const std::string& w, double gap_value = 0.0)
      : Error(ErrorKind::NonHyperbolic, w), gap(gap_value) {}
  double gap;
};

struct IntegrationError : Error {
  explicit IntegrationError(const std::string& w)
      : Error(ErrorKind::Integration, w) {}
};

struct ContractionError : Error {
  explicit ContractionError(const std::string& w, double factor = 0.0)
      : Error(ErrorKind::Contraction, w), contraction(factor) {}
  double contraction;
};

struct ThresholdError : Error {
  ThresholdError(const std::string& w, double value_, double threshold_)
      : Error(ErrorKind::Threshold, w), value(value_), threshold(threshold_) {}
  double value;
  double threshold;
};

struct IsomorphismError : Error {
  explicit IsomorphismError(const std::string& w)
      : Error(ErrorKind::Isomorphism, w) {}
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Window: return "WindowError";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::NonHyperbolic: return "NonHyperbolicError";
    case ErrorKind::Integration: return "IntegrationError";
    case ErrorKind::Contraction: return "ContractionError";
    case ErrorKind::Threshold: return "ThresholdError";
    case ErrorKind::Isomorphism: return "IsomorphismError";
  }
  return "Error";
}

}  // namespace rds

#endif
