// One line per acceptance criterion; exit status 0 only if all pass.
#include "rds/cli.hpp"
#include "rds/cocycle.hpp"
#include "rds/dichotomy.hpp"
#include "rds/greens.hpp"
#include "rds/hyperbolic.hpp"
#include "rds/linalg.hpp"
#include "rds/noise.hpp"
#include "rds/robustness.hpp"
#include "rds/sde_bridge.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace rds;

namespace {

// pinned tolerances
constexpr double kCollapseTol = 1e-12;
constexpr double kGeometricTol = 1e-8;
constexpr double kSlack = 1.1;
constexpr double kRateTol = 1e-9;
constexpr double kLiftRel = 0.05;
constexpr double kVarLo = 0.47, kVarHi = 0.53;
constexpr double kLinearOuTol = 1e-4;
constexpr double kOracleTol = 1e-6;
constexpr double kRatioMax = 0.2;
constexpr double kTrendSlack = 0.10;
constexpr double kWaveZeroTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string g6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Vector vec1(double x) { return Vector::Constant(1, x); }

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// ---- 1 ----
Outcome closed_forms() {
  Outcome o;
  const double l2 = std::log(2.0);
  const double th = delta_threshold(l2);
  o.check(std::abs(th - 1.0 / 3.0) <= 1e-16, "delta_threshold(ln 2) = " + g6(th));
  for (double d : {1.0, 2.5, 10.0}) {
    const GronwallConstants g = gronwall_constants(l2, 0.0, d);
    o.check(std::abs(g.a_tilde - l2) <= kCollapseTol && std::abs(g.b_tilde - l2) <= kCollapseTol,
            "gronwall(ln 2, 0, " + g6(d) + ")");
  }
  for (double K : {1.0, 3.7, 40.0})
    for (double a : {0.05, std::log(2.0), 2.0}) {
      const RobustConstants c = robust_constants(K, a, 0.0);
      const bool ok = c.rho == 0 && std::abs(c.alpha_tilde - a) <= kCollapseTol &&
                      std::abs(c.beta_tilde - a) <= kCollapseTol && std::abs(c.D1 - 1) <= kCollapseTol &&
                      std::abs(c.D2 - 1) <= kCollapseTol && std::abs(c.M - K) <= kCollapseTol * K;
      o.check(ok, "robust_constants(" + g6(K) + ", " + g6(a) + ", 0)");
    }
  o.note("delta_threshold(ln 2) - 1/3 = " + g6(th - 1.0 / 3.0));
  return o;
}

// ---- 2 ----
Outcome admissibility() {
  Outcome o;
  const Matrix a = Matrix::Constant(1, 1, 0.5);
  DiscreteCocycle c = DiscreteCocycle::constant(a);
  DichotomyCertificate cert = autonomous_certificate_discrete(a);
  const std::int64_t n0 = -60, n1 = 60, w = 40;
  AdmissibilityOperator op(c, cert, [](std::int64_t) { return Matrix::Constant(1, 1, 0.05); }, n0, n1);
  const double tol = 1e-13;
  Sequence f = Sequence::zeros(n0, n1, 1);
  const double z = 1.0;
  f.at(-1)(0) = z;
  const BoundedSolution s = op.solve(f, tol);
  double err = 0;
  for (std::int64_t n = -w; n <= w; ++n) {
    const double exact = n >= 0 ? z * std::pow(0.55, static_cast<double>(n)) : 0.0;
    err = std::max(err, std::abs(s.x.at(n)(0) - exact));
  }
  o.check(err <= kGeometricTol, "geometric impulse error " + g6(err));
  const BoundedSolution zero = op.solve(Sequence::zeros(n0, n1, 1), tol);
  o.check(zero.x.sup_norm() == 0.0, "zero forcing gives " + g6(zero.x.sup_norm()));
  const double tol2 = 1e-11;
  Sequence g = Sequence::zeros(n0, n1, 1);
  for (std::int64_t n = n0; n <= n1; ++n) g.at(n)(0) = 3 * std::sin(0.7 * static_cast<double>(n)) + 1;
  const BoundedSolution s0 = op.solve(f, Sequence::zeros(n0, n1, 1), tol2);
  const BoundedSolution s1 = op.solve(f, g, tol2);
  double gap = 0;
  for (std::int64_t n = n0; n <= n1; ++n) gap = std::max(gap, (s0.x.at(n) - s1.x.at(n)).norm());
  o.check(gap <= 2 * tol2, "initial guesses differ by " + g6(gap));
  o.note("impulse error " + g6(err) + ", guess gap " + g6(gap) + " (2 tol = " + g6(2 * tol2) + ")");
  return o;
}

// ---- 3 ----
// Projection onto the stable direction along the unstable one, both found by
// power iteration: forward products pick out the unstable direction, inverse
// products the stable one.
Matrix power_stable_projection(const Matrix& m) {
  const Matrix inv = m.inverse();
  Vector u = Vector::Ones(2), s = Vector::Ones(2);
  for (int k = 0; k < 400; ++k) {
    u = (m * u).normalized();
    s = (inv * s).normalized();
  }
  Vector w(2);
  w << -u(1), u(0);  // annihilates u
  return s * w.transpose() / w.dot(s);
}

Outcome robustness_end_to_end() {
  Outcome o;
  {
    const Matrix a = Matrix::Constant(1, 1, 0.5);
    const Matrix b = Matrix::Constant(1, 1, 0.55);
    DichotomyCertificate base = autonomous_certificate_discrete(a);
    RobustOptions opt;
    opt.verify_slack = kSlack;
    RobustDichotomy r = robust_dichotomy_discrete(DiscreteCocycle::constant(a), base, DiscreteCocycle::constant(b),
                                                  -20, 20, opt);
    // verify again, independently of the run's own report
    SampledEvolution e = sample_evolution(DiscreteCocycle::constant(b), -20, 20);
    VerifyOptions vo;
    vo.slack = kSlack;
    const bool ok = verify_dichotomy(e, r.certificate, vo).passed();
    o.check(ok, "scalar certificate verification");
    o.check(r.constants.alpha_tilde <= -std::log(0.55) + kRateTol, "alpha~ = " + g6(r.constants.alpha_tilde));
    o.note("scalar alpha~ " + g6(r.constants.alpha_tilde) + " <= " + g6(-std::log(0.55)));
  }
  {
    const Matrix a = diag2(0.5, 2.0);
    const double eps = 0.01;
    Matrix rot(2, 2);
    rot << std::cos(eps), -std::sin(eps), std::sin(eps), std::cos(eps);
    const Matrix b = rot * a;
    DichotomyCertificate base = autonomous_certificate_discrete(a);
    RobustDichotomy r = robust_dichotomy_discrete(DiscreteCocycle::constant(a), base, DiscreteCocycle::constant(b),
                                                  -10, 10);
    o.check(r.verification.passed(), "saddle certificate verification");
    const Matrix pa = power_stable_projection(a);
    const Matrix pb = power_stable_projection(b);
    const double brute = operator_norm(Matrix(pa - pb));
    const double dist = projection_distance(base, r.certificate);
    const double bound = projection_continuity_bound(base.exponent, r.constants.alpha_tilde, r.delta_eff);
    o.check(std::abs(dist - brute) <= 1e-8, "certificate distance " + g6(dist) + " vs power iteration " + g6(brute));
    o.check(brute <= bound, "projection distance " + g6(brute) + " above bound " + g6(bound));
    o.note("saddle distance " + g6(brute) + " <= bound " + g6(bound));
  }
  return o;
}

// ---- 4 ----
Outcome lift_round_trip() {
  Outcome o;
  const Matrix a = diag2(-1.0, 1.0);
  ContinuousCocycle phi = ContinuousCocycle::autonomous(a);
  DichotomyCertificate base = autonomous_certificate(a);
  RobustDichotomy r = robust_dichotomy_continuous(phi, base, phi, -4, 4);
  o.check(r.verification.passed(), "lifted continuous certificate verification");
  double scan = 0;
  for (int i = 0; i <= 4096; ++i) {
    const double t = i / 4096.0;
    scan = std::max(scan, operator_norm(expm(Matrix(a * t))) * std::exp(base.exponent * t));
  }
  scan *= base.bound;
  const double rel = std::abs(r.lift_bound_alpha - scan) / scan;
  o.check(rel <= kLiftRel, "K^ = " + g6(r.lift_bound_alpha) + " vs scan " + g6(scan));
  o.note("K^ " + g6(r.lift_bound_alpha) + ", scan " + g6(scan) + ", rel " + g6(rel));
  return o;
}

// ---- 5 ----
// max over steps of |(z_{i+1} - z_i)/h + (z_i + z_{i+1})/2 - (w_{i+1} - w_i)/h|
double identity_residual(double h) {
  auto w = [](double t) { return std::sin(2 * t) + 0.3 * t; };
  SamplePath p = extend_for_ou(SamplePath::from_function(TimeGrid::from_bounds(-45, 6, h), w, "smooth"), -4, 5);
  OuProcess z(p, -4, 5);
  double worst = 0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double dw = p.at(z.time(i + 1)) - p.at(z.time(i));
    worst = std::max(worst, std::abs((z.node(i + 1) - z.node(i)) / h + 0.5 * (z.node(i) + z.node(i + 1)) - dw / h));
  }
  return worst;
}

Outcome ou_diagnostics() {
  Outcome o;
  const double h = 1.0 / 64.0;
  const int n = 10000;
  std::vector<double> zs;
  zs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const SamplePath p = ou_ready_path(derive_seed(20260101, static_cast<std::uint64_t>(i)), -h, h, h);
    zs.push_back(OuProcess(p, -h, h)(0.0));
  }
  double mean = 0;
  for (double z : zs) mean += z;
  mean /= n;
  double var = 0;
  for (double z : zs) var += (z - mean) * (z - mean);
  var /= n - 1;
  o.check(var >= kVarLo && var <= kVarHi, "variance " + g6(var));

  SamplePath lin = extend_for_ou(SamplePath::linear(TimeGrid::from_bounds(-60, 21, h)), -20, 20);
  OuProcess zl(lin, -20, 20);
  double dev = 0;
  for (std::size_t i = 0; i < zl.size(); ++i) dev = std::max(dev, std::abs(zl.node(i) - 1.0));
  o.check(dev <= kLinearOuTol, "linear path deviation " + g6(dev));

  const double r1 = identity_residual(h);
  const double r2 = identity_residual(h / 2);
  o.check(r1 <= h && r2 <= h / 2, "identity residual " + g6(r1) + ", " + g6(r2));
  o.note("variance " + g6(var) + " over " + std::to_string(n) + " paths, linear-path deviation " + g6(dev) +
         ", identity residual " + g6(r1) + " at h, " + g6(r2) + " at h/2");
  return o;
}

// ---- 6 ----
Outcome hyperbolic_convergence() {
  Outcome o;
  {
    auto g = [](double t) { return std::sin(t) + 0.5 * std::cos(2 * t); };
    SemilinearProblem p;
    p.linear_part = Matrix::Constant(1, 1, -1.0);
    p.f0 = [](const Vector& y) { return Vector(Vector::Zero(y.size())); };
    p.f0_jacobian = [](const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    p.f_eta = [g](double eta, double t, const Vector&) { return vec1(eta * g(t)); };
    p.f_eta_jacobian = [](double, double, const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
    p.equilibrium = vec1(0);
    const double eta = 0.01;
    HyperbolicOptions ho;
    ho.t_begin = -30;
    ho.t_end = 30;
    ho.h = 1.0 / 256.0;
    ho.require_contraction = false;
    HyperbolicSolutionCertificate c = find_hyperbolic_solution(p, eta, ho);
    double err = 0, sup_g = 0;
    for (std::size_t i = c.interior_first; i <= c.interior_last; ++i) {
      const double t = c.times[i];
      const double exact = eta * (0.5 * (std::sin(t) - std::cos(t)) + 0.1 * (std::cos(2 * t) + 2 * std::sin(2 * t)));
      err = std::max(err, std::abs(c.trajectory[i](0) - exact));
      sup_g = std::max(sup_g, std::abs(g(t)));
    }
    o.check(c.converged, "linear solve did not converge");
    o.check(err <= kOracleTol, "variation-of-constants error " + g6(err));
    o.check(c.sup_distance <= eta * sup_g, "sup_distance " + g6(c.sup_distance) + " > eta sup|g|");
    o.note("linear error " + g6(err));
  }
  const std::vector<double> grid{0.2, 0.1, 0.05, 0.025};
  std::vector<std::vector<double>> dist(grid.size());
  int certified = 0, rows = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double t0 = -30, t1 = 30, h = 1.0 / 64.0;
    auto ou = std::make_shared<const OuProcess>(ou_ready_path(seed, t0, t1, h), t0, t1);
    const SemilinearProblem p = cubic_ou_model(ou, Kappa::rational());
    HyperbolicOptions ho;
    ho.t_begin = t0;
    ho.t_end = t1;
    ho.h = h;
    ho.require_contraction = false;
    ho.calibration = calibrate_eta(p, ho);
    std::vector<double> etas = grid;
    etas.push_back(0.5 * ho.calibration->selection.eta);
    for (std::size_t k = 0; k < etas.size(); ++k) {
      HyperbolicSolutionCertificate c = find_hyperbolic_solution(p, etas[k], ho);
      certify_hyperbolic(p, c);
      ++rows;
      if (k < grid.size()) {
        if (!c.converged) o.check(false, "seed " + std::to_string(seed) + " eta " + g6(etas[k]) + " diverged");
        dist[k].push_back(c.sup_distance);
      }
      if (c.status == HyperbolicStatus::Certified) {
        ++certified;
        const bool lin = c.linearization && c.linearization->verification.passed();
        o.check(c.sup_distance < c.epsilon && lin,
                "certified row seed " + std::to_string(seed) + " eta " + g6(etas[k]));
      }
    }
  }
  std::vector<double> med;
  for (const auto& d : dist) med.push_back(median(d));
  for (std::size_t k = 1; k < med.size(); ++k)
    o.check(med[k] <= med[k - 1], "median not non-increasing at eta " + g6(grid[k]));
  const double ratio = med.back() / med.front();
  o.check(ratio <= kRatioMax, "final/initial ratio " + g6(ratio));
  o.check(certified > 0, "no certified row");
  o.note("cubic medians " + g6(med[0]) + " " + g6(med[1]) + " " + g6(med[2]) + " " + g6(med[3]) + ", ratio " +
         g6(ratio) + ", certified " + std::to_string(certified) + "/" + std::to_string(rows));
  return o;
}

// ---- 7 ----
Outcome wave_demo() {
  Outcome o;
  const std::vector<double> grid{0.04, 0.02, 0.01, 0.005, 0.0};
  std::vector<std::vector<double>> dist(grid.size());
  int below = 0, below_certified = 0;
  double cutoff = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    WaveDemoOptions opt;
    opt.modes = 4;
    opt.damping = 1.0;
    opt.eta_grid = grid;
    opt.seed = seed;
    opt.hyperbolic.t_begin = -20;
    opt.hyperbolic.t_end = 20;
    const WaveDemoReport rep = run_wave_demo(opt);
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
      const WaveDemoRow& r = rep.rows[k];
      dist[k].push_back(r.sup_dist_y);
      cutoff = std::max(cutoff, r.eta_cutoff);
      if (r.eta <= r.eta_cutoff) {
        ++below;
        if (r.certified) ++below_certified;
      }
      if (r.eta == 0.0) {
        o.check(r.certified, "eta = 0 row not certified (seed " + std::to_string(seed) + ")");
        o.check(r.sup_dist_v <= kWaveZeroTol && r.sup_dist_y <= kWaveZeroTol, "eta = 0 row moved off equilibrium");
      }
    }
  }
  o.check(below == below_certified, std::to_string(below - below_certified) + " rows below cutoff not certified");
  std::vector<double> med;
  for (const auto& d : dist) med.push_back(median(d));
  for (std::size_t k = 1; k < med.size(); ++k)
    o.check(med[k] <= med[k - 1] * (1 + kTrendSlack), "median trend breaks at eta " + g6(grid[k]));
  o.note("rows below cutoff " + std::to_string(below) + " (all certified: " + (below == below_certified ? "yes" : "no") +
         "), largest cutoff " + g6(cutoff) + ", median sup_dist_y at eta 0.04 " + g6(med[0]));
  return o;
}

// ---- 8 ----
int cli_exit(const std::string& command, const std::string& cfg_text) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rds_acceptance";
  fs::create_directories(dir);
  const fs::path cfg = dir / (command + ".cfg.in");
  std::ofstream(cfg, std::ios::binary) << cfg_text;
  std::ostringstream out, err;
  return run_command({command, "--config", cfg.string(), "--out", (dir / "out").string()}, out, err);
}

Outcome falsification() {
  Outcome o;
  Matrix saddle = diag2(-1.0, 1.0);
  DichotomyCertificate good = autonomous_certificate(saddle);
  SampledEvolution e = sample_evolution(ContinuousCocycle::autonomous(saddle), -4, 4, 0.25);
  o.check(verify_dichotomy(e, good).passed(), "honest certificate rejected");
  DichotomyCertificate fast = good;
  fast.exponent *= 2;
  o.check(!verify_dichotomy(e, fast).passed(), "doubled alpha accepted");
  DichotomyCertificate ident = good;
  ident.stable = {Matrix::Identity(2, 2)};
  o.check(!verify_dichotomy(e, ident).passed(), "identity projection accepted");

  bool threw = false;
  try {
    robust_constants(1.0, std::log(2.0), 0.34);
  } catch (const ThresholdError&) {
    threw = true;
  }
  o.check(threw, "delta over threshold accepted by robust_constants");
  threw = false;
  try {
    const Matrix a = Matrix::Constant(1, 1, 0.5);
    robust_dichotomy_discrete(DiscreteCocycle::constant(a), autonomous_certificate_discrete(a),
                              DiscreteCocycle::constant(Matrix::Constant(1, 1, 0.85)), -10, 10);
  } catch (const ThresholdError&) {
    threw = true;
  }
  o.check(threw, "delta over threshold accepted by robust_dichotomy_discrete");
  const int over = cli_exit("robustness", "scalar_perturbed = 0.85\n");
  o.check(over == 1, "robustness over threshold exit " + std::to_string(over));
  const int bad = cli_exit("robustness", "verify_slack = 0.5\n");
  o.check(bad == 2, "malformed config exit " + std::to_string(bad));
  o.note("doubled alpha, identity projection and over-threshold delta all rejected; exits " + std::to_string(over) +
         "/" + std::to_string(bad));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "closed-form constant regression", closed_forms},
      {2, "admissibility oracle", admissibility},
      {3, "robustness end-to-end", robustness_end_to_end},
      {4, "discretize/lift round trip", lift_round_trip},
      {5, "OU diagnostics", ou_diagnostics},
      {6, "hyperbolic-solution convergence", hyperbolic_convergence},
      {7, "wave demo", wave_demo},
      {8, "falsification controls", falsification},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
