#ifndef RDS_HYPERBOLIC_HPP
#define RDS_HYPERBOLIC_HPP

#include "rds/core.hpp"
#include "rds/dichotomy.hpp"
#include "rds/robustness.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rds {

using VectorField = std::function<Vector(const Vector&)>;
using JacobianField = std::function<Matrix(const Vector&)>;
using RandomField = std::function<Vector(double eta, double t, const Vector&)>;
using RandomJacobian = std::function<Matrix(double eta, double t, const Vector&)>;

// Central differences with step 1e-5 (1 + ||x||).
Matrix numerical_jacobian(const VectorField& f, const Vector& x);

// y' = B y + f_eta(Theta_t w, y), with f_0 autonomous and y0 an equilibrium
// of the unperturbed equation. U is the closed ball of radius `radius` about y0.
struct SemilinearProblem {
  Matrix linear_part;
  VectorField f0;
  JacobianField f0_jacobian;  // optional
  RandomField f_eta;
  RandomJacobian f_eta_jacobian;  // optional
  Vector equilibrium;
  double radius = 0.5;

  int dim() const { return static_cast<int>(linear_part.rows()); }
  Vector eval_f0(const Vector& y) const { return f0(y); }
  Matrix jac_f0(const Vector& y) const;
  Vector eval(double eta, double t, const Vector& y) const { return f_eta(eta, t, y); }
  Matrix jac(double eta, double t, const Vector& y) const;
  // B + f0'(y0)
  Matrix linearization() const;
  // Checks shapes, f_eta(0, .) = f0 and that y0 is an equilibrium.
  void validate(double tol = 1e-9) const;
};

// Deterministic sample points: centre, axis points on the sphere and
// Halton points filling the ball.
std::vector<Vector> sample_cloud(const Vector& center, double radius, int count);

struct SampleOptions {
  double t_begin = -10;
  double t_end = 10;
  double dt = 1.0 / 16.0;
  int cloud = 24;
};

// sup over t and U of ||f_eta - f_0|| + ||D f_eta - D f_0||.
double lambda_eta(const SemilinearProblem& p, double eta, const SampleOptions& opt);
// sup over x in U, 0 < ||h|| <= eps of ||f0(x+h) - f0(x) - f0'(x) h|| / ||h||.
double rho_modulus(const SemilinearProblem& p, double eps, int cloud = 24);
// sup over ||z|| <= eps of ||f0'(y0 + z) - f0'(y0)||.
double derivative_modulus(const SemilinearProblem& p, double eps, int cloud = 24);

struct EpsilonThresholds {
  double threshold = 0;  // beta / (6 M)
  double eps1 = 0;
  double eps2 = 0;
  double eps0 = 0;
};
EpsilonThresholds epsilon_thresholds(const SemilinearProblem& p, double M, double beta, int cloud = 24);

struct EtaSelection {
  double eta = 0;
  bool at_grid_max = false;
  bool warning = false;  // even the smallest tested eta violates the bound
};
// Largest eta in (0, eta_max] on a 16-step bisection with lambda(eta) < eps beta / (6 M).
EtaSelection eta_epsilon(double eps, double M, double beta, const std::function<double(double)>& lambda,
                         double eta_max = 1.0, const EpsilonThresholds* thresholds = nullptr);

// Everything in the eta selection that does not depend on eta itself.
struct EtaCalibration {
  double M = 1;
  double beta = 0;
  EpsilonThresholds thresholds;
  double epsilon = 0;
  EtaSelection selection;
};

enum class HyperbolicStatus { Certified, BoundedOnly, Failed };
const char* to_string(HyperbolicStatus s);

struct HyperbolicOptions {
  double t_begin = -40;
  double t_end = 40;
  double h = 1.0 / 64.0;
  double tol = 1e-10;
  int max_iter = 500;
  double epsilon = 0;        // 0 picks half of eps0
  double interior_trim = -1; // -1 picks from the dichotomy constants
  bool require_contraction = true;
  double extra_cutoff = std::numeric_limits<double>::infinity();
  SampleOptions sampling{};  // t range is replaced by the solve window
  // Starting offsets from y0 on the solve nodes; empty starts from zero.
  std::vector<Vector> initial_guess;
  // Reuse across an eta sweep; must come from calibrate_eta with the same window.
  std::optional<EtaCalibration> calibration;
};

EtaCalibration calibrate_eta(const SemilinearProblem& p, const HyperbolicOptions& opt);

struct HyperbolicSolutionCertificate {
  double eta = 0;
  double epsilon = 0;
  double eta_cutoff = 0;
  double eta_epsilon = 0;
  EpsilonThresholds thresholds;
  double M = 1;     // linearization dichotomy bound
  double beta = 0;  // linearization dichotomy exponent
  double lambda = 0;
  double contraction = 0;       // (2M/beta)(lambda + Lip(eps))
  double self_map_radius = 0;   // (2M/beta)(lambda + rho0(eps) eps)
  bool theory_applicable = false;
  bool converged = false;
  int iterations = 0;
  double residual = 0;
  std::vector<double> times;
  std::vector<Vector> trajectory;
  Vector equilibrium;
  std::size_t interior_first = 0;
  std::size_t interior_last = 0;
  double sup_distance = 0;  // over the interior
  std::optional<RobustDichotomy> linearization;
  double sup_linear_perturbation = 0;
  HyperbolicStatus status = HyperbolicStatus::Failed;
  std::string note;

  // Linear interpolation of the trajectory; clamps outside.
  Vector at(double t) const;
};

HyperbolicSolutionCertificate find_hyperbolic_solution(const SemilinearProblem& p, double eta,
                                                       const HyperbolicOptions& opt = {});

// Linearization along the solution: y' = (A + B_eta(t)) y with
// B_eta(t) = D f_eta(t, xi(t)) - f0'(y0).
ContinuousCocycle linearize_along(const SemilinearProblem& p, const HyperbolicSolutionCertificate& c,
                                  double step = 1.0 / 64.0);

struct CertifyOptions {
  ContinuousRobustOptions robust{};
  double margin = 0.1;
};

// Attaches a robust dichotomy of the linearization and settles the status.
void certify_hyperbolic(const SemilinearProblem& p, HyperbolicSolutionCertificate& c,
                        const CertifyOptions& opt = {});

// Classical RK4 for y' = B y + f_eta(t, y); used for flow checks.
Vector rk4_flow(const SemilinearProblem& p, double eta, double t0, double t1, const Vector& y0, double h);

}  // namespace rds

#endif
