#ifndef RDS_CONFIG_HPP
#define RDS_CONFIG_HPP

#include "rds/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rds {

// Flat key = value file, '#' starts a comment. Every key is optional; the
// schema with defaults is what to_config_text prints for a default config.
struct ExperimentConfig {
  std::string command;  // ou-check | robustness | hyperbolic | wave, or empty
  std::uint64_t seed = 1;
  std::string out = "out";

  // window for noise, hyperbolic solutions and the wave demo
  double t_min = -30;
  double t_max = 30;
  double h = 1.0 / 64.0;
  double tail_tol = 1e-10;
  double tol = 1e-10;  // fixed point residual
  std::vector<double> eta_grid{0.2, 0.1, 0.05, 0.025, 0.0};
  std::string kappa = "rational";  // rational | constant
  double kappa_value = 1.0;        // used by kappa = constant

  // ou-check
  std::string ou_path = "wiener";  // wiener | zero | linear
  int ou_paths = 10000;
  double variance_tol = 0.03;
  double mean_tol = 0.03;
  double identity_tol = 0.02;
  double sublinearity_horizon = 1000;
  double sublinearity_tol = 0.05;

  // robustness: scalar phi = a vs psi = b, saddle diag(0.5, 2) + eps [[0,1],[1,0]],
  // optional user pair of constant maps given row-major
  double scalar_base = 0.5;
  double scalar_perturbed = 0.55;
  double saddle_eps = 0.01;
  std::vector<double> matrix_a;
  std::vector<double> matrix_b;
  long n_min = -20;
  long n_max = 20;
  double threshold_margin = 0.9;
  double verify_slack = 1.1;

  // hyperbolic
  std::vector<std::string> models{"cubic", "additive"};
  double radius = 0.5;

  // wave: u_tt + damping u_t = u_xx + f_linear u - f_cubic u^3
  int modes = 4;
  double damping = 1.0;
  double f_linear = 1.0;
  double f_cubic = 1.0;
  std::string noise = "both";  // both | position | velocity

  bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError naming the line and field.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Every key in a fixed order, doubles with 17 significant digits.
std::string to_config_text(const ExperimentConfig& c);

// Cross-field checks; parse_config runs it too.
void validate(const ExperimentConfig& c);

}  // namespace rds

#endif
