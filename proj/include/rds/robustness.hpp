#ifndef RDS_ROBUSTNESS_HPP
#define RDS_ROBUSTNESS_HPP

#include "rds/cocycle.hpp"
#include "rds/core.hpp"
#include "rds/dichotomy.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace rds {

// (1 - e^{-alpha}) / (1 + e^{-alpha})
double delta_threshold(double alpha);

struct GronwallConstants {
  double a_tilde = 0;
  double b_tilde = 0;
};
GronwallConstants gronwall_constants(double a, double delta, double d);

struct RobustConstants {
  double K = 1;
  double alpha = 0;
  double delta = 0;
  double threshold = 0;
  double rho = 0;
  double alpha_tilde = 0;
  double beta_tilde = 0;
  double D1 = 1;
  double D2 = 1;
  double M = 1;
};
RobustConstants robust_constants(double K, double alpha, double delta);

struct RobustOptions {
  double threshold_margin = 0.9;  // reject delta_eff above margin * threshold
  double impulse_tol = 1e-12;
  long padding = -1;              // extra nodes on each side; -1 picks from the constants
  double verify_slack = 1.1;
  std::optional<double> delta_override;  // use this delta for the constants instead
};

struct RobustDichotomy {
  DichotomyCertificate certificate;
  RobustConstants constants;
  double delta_eff = 0;
  double sup_perturbation = 0;
  long padding = 0;
  double idempotency_error = 0;
  VerificationReport verification;
  // Continuous lift only: M sup ||psi(t)|| e^{alpha t} and M sup ||psi(t)|| e^{alpha~ t}.
  double lift_bound_alpha = 0;
  double lift_bound_alpha_tilde = 0;
};

// Dichotomy of psi on [n0, n1] from one of phi, by impulse responses of the
// admissibility problem on a padded window.
RobustDichotomy robust_dichotomy_discrete(const DiscreteCocycle& phi, const DichotomyCertificate& base,
                                          const DiscreteCocycle& psi, std::int64_t n0, std::int64_t n1,
                                          const RobustOptions& opt = {});

// Decay fits along orbits of the certificate's projections at the window
// midpoint m: columns of Pi^s(m) pushed forward to n1, columns of Pi^u(m)
// pulled back to n0. Rates are least-squares slopes of log ||x_n|| and must
// reach (1 - rate_slack) alpha~ forward and (1 - rate_slack) beta~ backward.
struct OrbitDiagnostic {
  std::int64_t node = 0;
  double forward_rate = 0;   // +inf when Pi^s(m) = 0
  double backward_rate = 0;  // +inf when Pi^u(m) = 0
  double forward_required = 0;
  double backward_required = 0;
  bool forward_pass = false;
  bool backward_pass = false;
  bool passed() const { return forward_pass && backward_pass; }
};

OrbitDiagnostic orbit_diagnostic(const DiscreteCocycle& psi, const RobustDichotomy& r, std::int64_t n0,
                                 std::int64_t n1, double rate_slack = 0.05);

struct LiftResult {
  DichotomyCertificate certificate;
  double bound_alpha = 0;        // M sup ||psi(t, Theta_n)|| e^{alpha t}
  double bound_alpha_tilde = 0;  // M sup ||psi(t, Theta_n)|| e^{alpha~ t}
};

// Continuous certificate on [n0, n1] at spacing 1/subdivisions from a discrete
// one on the integer nodes; Pi(n + t) = psi(t) P_n psi(t)^{-1}.
LiftResult lift_certificate(const ContinuousCocycle& psi, const DichotomyCertificate& discrete,
                            double base_alpha, int subdivisions = 8);

struct ContinuousRobustOptions {
  RobustOptions discrete;
  int subdivisions = 8;
  int delta_samples_per_unit = 16;
  double verify_slack = 1.2;
  std::size_t verify_horizon = 0;
};

// K sup ||phi(t, Theta_s) - psi(t, Theta_s)|| over sampled s in [s0, s1], t in [0, 1].
double continuous_delta(const ContinuousCocycle& phi, const ContinuousCocycle& psi, double K, double s0,
                        double s1, int samples_per_unit);

RobustDichotomy robust_dichotomy_continuous(const ContinuousCocycle& phi, const DichotomyCertificate& base,
                                            const ContinuousCocycle& psi, std::int64_t n0, std::int64_t n1,
                                            const ContinuousRobustOptions& opt = {});

struct LinearPerturbationCheck {
  double eps_measured = 0;  // sup ||int_s^{s+t} B||
  double eps_allowed = 0;   // largest eps with K eps L L1 below the margin threshold
  double L = 0;             // sup_{0<=t<=1} ||e^{At}||
  double L1 = 0;            // L e^{L eps}
  double K = 1;
  double alpha = 0;
  double threshold = 0;
  double product = 0;       // K eps L L1
  bool admissible = false;
};

LinearPerturbationCheck linear_random_perturbation_check(const Matrix& a, const DichotomyCertificate& cert,
                                                         const std::function<Matrix(double)>& b,
                                                         const TimeGrid& window, int samples_per_unit = 64,
                                                         double margin = 0.9);

}  // namespace rds

#endif
