#ifndef RDS_SDE_BRIDGE_HPP
#define RDS_SDE_BRIDGE_HPP

#include "rds/core.hpp"
#include "rds/hyperbolic.hpp"
#include "rds/noise.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rds {

// Which coordinates carry the multiplicative noise.
enum class NoisePattern { Both, Position, Velocity };
NoisePattern parse_noise_pattern(const std::string& s);
const char* to_string(NoisePattern p);

// dy = B y dt + f(y) dt + eta kappa_t D y o dW with D diagonal, entries 0 or 1.
struct StratonovichSpec {
  Matrix linear_part;
  VectorField f;
  JacobianField f_jacobian;  // optional
  Kappa kappa = Kappa::rational();
  Vector noise_shape;        // diagonal of D; empty means the identity
  Vector equilibrium;
  double radius = 0.5;

  int dim() const { return static_cast<int>(linear_part.rows()); }
  Vector shape() const;
};

// v = E(t)^{-1} y with E(t) = exp(eta kappa_t z*(theta_t w) D) turns the
// equation into v' = B v + f_eta(t, v) with
//   f_eta = (E^{-1} B E - B) v + E^{-1} f(E v) + eta (kappa - kappa') z* D v.
struct RandomOde {
  SemilinearProblem problem;
  std::shared_ptr<const OuProcess> ou;
  Kappa kappa;
  Vector shape;

  // kappa_t z*(theta_t w)
  double exponent(double t) const;
  // diagonal of E(t) for a given eta
  Vector scaling(double eta, double t) const;
  // eta (kappa_t - kappa'_t) z* D, the linear noise coefficient
  Matrix noise_coefficient(double eta, double t) const;
  Vector to_original(double eta, double t, const Vector& v) const;
  Vector to_transformed(double eta, double t, const Vector& y) const;
};

RandomOde transform(const StratonovichSpec& s, std::shared_ptr<const OuProcess> ou);
RandomOde transform(const StratonovichSpec& s, const SamplePath& path, double t_begin, double t_end,
                    double tail_tol = 1e-10);

std::vector<Vector> inverse_transform(const RandomOde& ode, double eta, const std::vector<double>& times,
                                      const std::vector<Vector>& v);

// Same path, extended to the left until the OU tail on [t_begin, t_end] meets tail_tol.
SamplePath extend_for_ou(SamplePath p, double t_begin, double t_end, double tail_tol = 1e-10);
// Wiener path with enough past for the OU integral on [t_begin, t_end].
SamplePath ou_ready_path(std::uint64_t seed, double t_begin, double t_end, double h = 1.0 / 64.0,
                         double tail_tol = 1e-10);

// y' = -y + y^3 + eta c(t) (1 + y), c = (kappa - kappa') z*: the transformed
// multiplicative noise plus an additive part of the same size, so that the
// hyperbolic solution moves off the equilibrium.
SemilinearProblem cubic_ou_model(std::shared_ptr<const OuProcess> ou, const Kappa& kappa, double radius = 0.5);
// y' = -y + eta c(t)
SemilinearProblem additive_ou_model(std::shared_ptr<const OuProcess> ou, const Kappa& kappa, double radius = 0.5);

using ScalarFunction = std::function<double(double)>;

// Galerkin truncation of u_tt + beta u_t = u_xx + f(u) on (0, 1), Dirichlet,
// in the basis sqrt(2) sin(k pi x); state (a, a').
struct WaveSystem {
  int modes = 0;
  double damping = 0;
  int quadrature = 0;           // interior nodes x_j = j / (Q + 1)
  std::vector<double> lambda;   // (k pi)^2
  Matrix synthesis;             // u(x_j) = (S a)_j
  Matrix analysis;              // a = P u, exact for sine polynomials of degree < 2 (Q + 1)
  StratonovichSpec spec;        // noise pattern left as Both
  Matrix linearization;         // B + F'(0)
  SpectralSplit split;
};

WaveSystem build_wave_system(int modes, double damping, const ScalarFunction& f, const ScalarFunction& df,
                             int quadrature = 0);

struct WaveDemoOptions {
  int modes = 4;
  double damping = 2.0;
  ScalarFunction f = [](double u) { return u - u * u * u; };
  ScalarFunction df = [](double u) { return 1 - 3 * u * u; };
  std::vector<double> eta_grid{0.08, 0.04, 0.02, 0.01, 0.005, 0.0};
  std::uint64_t seed = 1;
  NoisePattern pattern = NoisePattern::Both;
  Kappa kappa = Kappa::rational();
  HyperbolicOptions hyperbolic{};
  CertifyOptions certify{};
};

struct WaveDemoRow {
  double eta = 0;
  double sup_dist_v = 0;
  double sup_dist_y = 0;
  bool certified = false;
  double alpha_tilde = 0;  // NaN when no linearization certificate
  double M_bound = 0;
  std::uint64_t seed = 0;
  std::string status;
  double eta_cutoff = 0;
  double epsilon = 0;
  double sup_linear_perturbation = 0;
  std::string note;
};

struct WaveDemoReport {
  int modes = 0;
  double damping = 0;
  double gap = 0;
  double ou_max_abs = 0;
  std::vector<WaveDemoRow> rows;
};

WaveDemoReport run_wave_demo(const WaveDemoOptions& opt);

}  // namespace rds

#endif
