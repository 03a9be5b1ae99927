#include "rds/hyperbolic.hpp"

#include "rds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace rds {

Matrix numerical_jacobian(const VectorField& f, const Vector& x) {
  const double step = 1e-5 * (1.0 + x.norm());
  const Vector fx = f(x);
  Matrix j(fx.size(), x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    xp(k) = x(k) + step;
    xm(k) = x(k) - step;
    j.col(k) = (f(xp) - f(xm)) / (2 * step);
    xp(k) = x(k);
    xm(k) = x(k);
  }
  return j;
}

Matrix SemilinearProblem::jac_f0(const Vector& y) const {
  if (f0_jacobian) return f0_jacobian(y);
  return numerical_jacobian(f0, y);
}

Matrix SemilinearProblem::jac(double eta, double t, const Vector& y) const {
  if (f_eta_jacobian) return f_eta_jacobian(eta, t, y);
  return numerical_jacobian([&](const Vector& x) { return f_eta(eta, t, x); }, y);
}

Matrix SemilinearProblem::linearization() const { return linear_part + jac_f0(equilibrium); }

void SemilinearProblem::validate(double tol) const {
  const int d = dim();
  if (linear_part.cols() != d || d == 0) throw DomainError("linear part must be square");
  if (equilibrium.size() != d) throw DomainError("equilibrium has wrong dimension");
  if (!f0 || !f_eta) throw DomainError("nonlinearities must be set");
  if (!(radius > 0)) throw DomainError("neighbourhood radius must be positive");
  const Vector r = linear_part * equilibrium + f0(equilibrium);
  if (r.size() != d) throw DomainError("f0 returns the wrong dimension");
  if (r.norm() > tol * (1 + equilibrium.norm())) {
    std::ostringstream msg;
    msg << "y0 is not an equilibrium: residual " << r.norm();
    throw DomainError(msg.str());
  }
  for (const Vector& x : sample_cloud(equilibrium, radius, 8)) {
    for (double t : {-1.0, 0.0, 2.5}) {
      if ((f_eta(0.0, t, x) - f0(x)).norm() > tol * (1 + f0(x).norm()))
        throw DomainError("f_eta at eta = 0 differs from f0");
    }
  }
}

namespace {

std::vector<int> first_primes(int count) {
  std::vector<int> out;
  for (int n = 2; static_cast<int>(out.size()) < count; ++n) {
    bool prime = true;
    for (int p : out) {
      if (p * p > n) break;
      if (n % p == 0) { prime = false; break; }
    }
    if (prime) out.push_back(n);
  }
  return out;
}

double halton(long index, int base) {
  double f = 1, r = 0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

}  // namespace

std::vector<Vector> sample_cloud(const Vector& center, double radius, int count) {
  const auto d = center.size();
  std::vector<Vector> out;
  out.push_back(center);
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e(i) = radius;
    out.push_back(center + e);
    out.push_back(center - e);
  }
  const Vector diag = Vector::Constant(d, radius / std::sqrt(static_cast<double>(d)));
  out.push_back(center + diag);
  out.push_back(center - diag);
  const auto primes = first_primes(static_cast<int>(d));
  for (long k = 1; static_cast<int>(out.size()) < count + 2 * static_cast<int>(d) + 3; ++k) {
    Vector v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = 2 * halton(k, primes[static_cast<std::size_t>(j)]) - 1;
    const double n2 = v.norm();
    if (n2 == 0) continue;
    // cube -> ball, radial rescaling by the sup norm
    out.push_back(center + radius * v * (v.cwiseAbs().maxCoeff() / n2));
  }
  return out;
}

double lambda_eta(const SemilinearProblem& p, double eta, const SampleOptions& opt) {
  const auto cloud = sample_cloud(p.equilibrium, p.radius, opt.cloud);
  std::vector<Vector> f0v;
  std::vector<Matrix> j0v;
  for (const auto& x : cloud) {
    f0v.push_back(p.eval_f0(x));
    j0v.push_back(p.jac_f0(x));
  }
  double sup = 0;
  const auto n = static_cast<long>(std::ceil((opt.t_end - opt.t_begin) / opt.dt - 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double t = std::min(opt.t_begin + static_cast<double>(i) * opt.dt, opt.t_end);
    for (std::size_t k = 0; k < cloud.size(); ++k) {
      const double v = (p.eval(eta, t, cloud[k]) - f0v[k]).norm() +
                       operator_norm(Matrix(p.jac(eta, t, cloud[k]) - j0v[k]));
      sup = std::max(sup, v);
    }
  }
  return sup;
}

double rho_modulus(const SemilinearProblem& p, double eps, int cloud) {
  if (!(eps > 0)) throw DomainError("rho_modulus needs eps > 0");
  const auto xs = sample_cloud(p.equilibrium, p.radius, cloud);
  const auto hs = sample_cloud(Vector::Zero(p.dim()), eps, 2 * p.dim() + 4);
  double sup = 0;
  for (const auto& x : xs) {
    const Vector fx = p.eval_f0(x);
    const Matrix jx = p.jac_f0(x);
    for (const auto& h0 : hs) {
      const double hn = h0.norm();
      if (hn == 0) continue;
      const Vector h = h0 * (eps / hn);  // sphere points dominate for these moduli
      sup = std::max(sup, (p.eval_f0(x + h) - fx - jx * h).norm() / eps);
    }
  }
  return sup;
}

double derivative_modulus(const SemilinearProblem& p, double eps, int cloud) {
  const Matrix j0 = p.jac_f0(p.equilibrium);
  double sup = 0;
  for (const auto& z : sample_cloud(p.equilibrium, eps, cloud))
    sup = std::max(sup, operator_norm(Matrix(p.jac_f0(z) - j0)));
  return sup;
}

EpsilonThresholds epsilon_thresholds(const SemilinearProblem& p, double M, double beta, int cloud) {
  if (!(M > 0) || !(beta > 0)) throw DomainError("epsilon thresholds need M > 0 and beta > 0");
  EpsilonThresholds e;
  e.threshold = beta / (6 * M);
  auto largest = [&](const std::function<double(double)>& g, double hi) {
    if (g(hi) < e.threshold) return hi;
    double lo = 0;
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) < e.threshold ? lo : hi) = mid;
    }
    return lo;
  };
  e.eps1 = largest([&](double x) { return derivative_modulus(p, x, cloud); }, p.radius);
  e.eps2 = largest([&](double x) { return rho_modulus(p, x, cloud); }, 0.5 * (1 - 1e-12));
  if (!(e.eps1 > 0) || !(e.eps2 > 0))
    throw ThresholdError("no admissible epsilon: nonlinearity moduli exceed beta / (6 M)", 0, e.threshold);
  e.eps0 = std::min(e.eps1, 0.5 * e.eps2);
  return e;
}

EtaSelection eta_epsilon(double eps, double M, double beta, const std::function<double(double)>& lambda,
                         double eta_max, const EpsilonThresholds* th) {
  if (th && !(eps < th->eps0)) {
    std::ostringstream msg;
    msg << "epsilon " << eps << " is not below eps0 = " << th->eps0 << " (bound by "
        << (th->eps1 <= 0.5 * th->eps2 ? "eps1" : "eps2 / 2") << ")";
    throw ThresholdError(msg.str(), eps, th->eps0);
  }
  const double target = eps * beta / (6 * M);
  EtaSelection s;
  if (lambda(eta_max) < target) {
    s.eta = eta_max;
    s.at_grid_max = true;
    return s;
  }
  double lo = 0, hi = eta_max;
  for (int i = 0; i < 16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (lambda(mid) < target ? lo : hi) = mid;
  }
  s.eta = lo;
  s.warning = lo == 0;
  return s;
}

const char* to_string(HyperbolicStatus s) {
  switch (s) {
    case HyperbolicStatus::Certified: return "certified";
    case HyperbolicStatus::BoundedOnly: return "bounded-only";
    case HyperbolicStatus::Failed: return "failed";
  }
  return "failed";
}

Vector HyperbolicSolutionCertificate::at(double t) const {
  if (times.empty()) throw DomainError("empty trajectory");
  if (t <= times.front()) return trajectory.front();
  if (t >= times.back()) return trajectory.back();
  const double h = times[1] - times[0];
  const double pos = (t - times.front()) / h;
  auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= times.size()) i = times.size() - 2;
  const double w = pos - static_cast<double>(i);
  return (1 - w) * trajectory[i] + w * trajectory[i + 1];
}

namespace {

struct PhiFunctions {
  Matrix e, phi1, phi2;
};

// Top block row of exp([[X, I, 0], [0, 0, I], [0, 0, 0]]).
PhiFunctions phi_functions(const Matrix& x) {
  const auto d = x.rows();
  Matrix big = Matrix::Zero(3 * d, 3 * d);
  big.topLeftCorner(d, d) = x;
  big.block(0, d, d, d).setIdentity();
  big.block(d, 2 * d, d, d).setIdentity();
  const Matrix e = expm(big);
  return {e.block(0, 0, d, d), e.block(0, d, d, d), e.block(0, 2 * d, d, d)};
}

}  // namespace

EtaCalibration calibrate_eta(const SemilinearProblem& p, const HyperbolicOptions& opt) {
  p.validate();
  EtaCalibration cal;
  const DichotomyCertificate base = autonomous_certificate(p.linearization());
  cal.M = base.bound;
  cal.beta = base.exponent;
  cal.thresholds = epsilon_thresholds(p, cal.M, cal.beta);
  cal.epsilon = opt.epsilon > 0 ? opt.epsilon : 0.5 * cal.thresholds.eps0;
  SampleOptions so = opt.sampling;
  so.t_begin = opt.t_begin;
  so.t_end = opt.t_end;
  cal.selection = eta_epsilon(cal.epsilon, cal.M, cal.beta, [&](double e) { return lambda_eta(p, e, so); }, 1.0,
                              &cal.thresholds);
  return cal;
}

HyperbolicSolutionCertificate find_hyperbolic_solution(const SemilinearProblem& p, double eta,
                                                       const HyperbolicOptions& opt) {
  p.validate();
  if (!(opt.t_end > opt.t_begin) || !(opt.h > 0)) throw ConfigError("bad solve window");
  HyperbolicSolutionCertificate c;
  c.eta = eta;
  c.equilibrium = p.equilibrium;
  const int d = p.dim();
  const Matrix a = p.linearization();
  const SpectralSplit split = spectral_projection(a);
  const EtaCalibration cal = opt.calibration ? *opt.calibration : calibrate_eta(p, opt);
  c.M = cal.M;
  c.beta = cal.beta;
  c.thresholds = cal.thresholds;
  c.epsilon = cal.epsilon;
  c.eta_epsilon = cal.selection.eta;
  c.eta_cutoff = std::min(cal.selection.eta, opt.extra_cutoff);

  SampleOptions so = opt.sampling;
  so.t_begin = opt.t_begin;
  so.t_end = opt.t_end;
  c.lambda = lambda_eta(p, eta, so);
  const double green = 2 * c.M / c.beta;
  c.contraction = green * (c.lambda + derivative_modulus(p, c.epsilon));
  c.self_map_radius = green * (c.lambda + rho_modulus(p, c.epsilon) * c.epsilon);
  c.theory_applicable = std::abs(eta) <= c.eta_cutoff && c.contraction < 1 && c.self_map_radius <= c.epsilon;
  if (opt.require_contraction && !c.theory_applicable) {
    std::ostringstream msg;
    msg << "contraction hypotheses fail at eta = " << eta << ": q = " << c.contraction
        << ", self-map radius " << c.self_map_radius << " vs eps " << c.epsilon << ", cutoff " << c.eta_cutoff;
    throw ContractionError(msg.str(), c.contraction);
  }

  const auto n = static_cast<std::size_t>(std::lround((opt.t_end - opt.t_begin) / opt.h));
  const double h = (opt.t_end - opt.t_begin) / static_cast<double>(n);
  c.times.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) c.times[i] = opt.t_begin + static_cast<double>(i) * h;

  const Matrix& ps = split.stable;
  const Matrix& pu = split.unstable;
  const PhiFunctions fs = phi_functions(Matrix(h * a * ps));
  const PhiFunctions fu = phi_functions(Matrix(-h * a * pu));
  const Matrix es = fs.e * ps;
  const Matrix w0 = h * ps * (fs.phi1 - fs.phi2);
  const Matrix w1 = h * ps * fs.phi2;
  const Matrix eu = fu.e * pu;
  const Matrix v0 = h * pu * fu.phi2;
  const Matrix v1 = h * pu * (fu.phi1 - fu.phi2);

  const Vector y0 = p.equilibrium;
  const Vector f0y0 = p.eval_f0(y0);
  const Matrix j0 = p.jac_f0(y0);
  std::vector<Vector> phi(n + 1, Vector::Zero(d)), g(n + 1), next(n + 1);
  if (!opt.initial_guess.empty()) {
    if (opt.initial_guess.size() != n + 1) throw ConfigError("initial guess does not match the solve grid");
    phi = opt.initial_guess;
  }
  const double blowup = 1e6 * (1 + p.radius);
  c.converged = false;
  for (int it = 1; it <= opt.max_iter; ++it) {
    for (std::size_t i = 0; i <= n; ++i) g[i] = p.eval(eta, c.times[i], y0 + phi[i]) - f0y0 - j0 * phi[i];
    Vector s = Vector::Zero(d);
    next[0] = s;
    for (std::size_t i = 0; i < n; ++i) {
      s = es * s + w0 * g[i] + w1 * g[i + 1];
      next[i + 1] = s;
    }
    Vector u = Vector::Zero(d);
    next[n] += u;
    for (std::size_t i = n; i-- > 0;) {
      u = eu * u - v0 * g[i] - v1 * g[i + 1];
      next[i] += u;
    }
    double res = 0, big = 0;
    for (std::size_t i = 0; i <= n; ++i) {
      res = std::max(res, (next[i] - phi[i]).norm());
      big = std::max(big, next[i].norm());
    }
    std::swap(phi, next);
    c.iterations = it;
    c.residual = res;
    if (!std::isfinite(res) || big > blowup) break;
    if (res <= opt.tol) {
      c.converged = true;
      break;
    }
  }
  c.trajectory.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) c.trajectory[i] = y0 + phi[i];

  double trim = opt.interior_trim;
  if (trim < 0) trim = std::ceil(std::log(1e6 * c.M) / c.beta);
  trim = std::min(trim, 0.25 * (opt.t_end - opt.t_begin));
  c.interior_first = static_cast<std::size_t>(std::lround(trim / h));
  c.interior_last = n - c.interior_first;
  c.sup_distance = 0;
  for (std::size_t i = c.interior_first; i <= c.interior_last; ++i)
    c.sup_distance = std::max(c.sup_distance, phi[i].norm());

  if (!c.converged) {
    std::ostringstream msg;
    msg << "fixed-point iteration did not converge (residual " << c.residual << " after " << c.iterations << ")";
    if (opt.require_contraction) throw ContractionError(msg.str(), c.contraction);
    c.status = HyperbolicStatus::Failed;
    c.note = msg.str();
    return c;
  }
  c.status = HyperbolicStatus::BoundedOnly;
  return c;
}

ContinuousCocycle linearize_along(const SemilinearProblem& p, const HyperbolicSolutionCertificate& c,
                                  double step) {
  const Matrix a = p.linearization();
  const Matrix j0 = p.jac_f0(p.equilibrium);
  const double eta = c.eta;
  // Copies keep the cocycle valid after the certificate goes away.
  auto traj = std::make_shared<HyperbolicSolutionCertificate>();
  traj->times = c.times;
  traj->trajectory = c.trajectory;
  return ContinuousCocycle(
      p.dim(),
      [p, a, j0, eta, traj](double t) { return Matrix(a + p.jac(eta, t, traj->at(t)) - j0); }, step);
}

void certify_hyperbolic(const SemilinearProblem& p, HyperbolicSolutionCertificate& c, const CertifyOptions& opt) {
  if (!c.converged) return;
  const Matrix a = p.linearization();
  const ContinuousCocycle phi = ContinuousCocycle::autonomous(a);
  const DichotomyCertificate base = autonomous_certificate(a, {opt.margin, 1.0 / 64.0, 0});
  const ContinuousCocycle psi = linearize_along(p, c);
  const auto n0 = static_cast<std::int64_t>(std::ceil(c.times[c.interior_first]));
  const auto n1 = static_cast<std::int64_t>(std::floor(c.times[c.interior_last]));
  if (n1 - n0 < 2) {
    c.note = "interior too short to certify the linearization";
    return;
  }
  const Matrix j0 = p.jac_f0(p.equilibrium);
  c.sup_linear_perturbation = 0;
  for (std::size_t i = c.interior_first; i <= c.interior_last; ++i)
    c.sup_linear_perturbation =
        std::max(c.sup_linear_perturbation, operator_norm(Matrix(p.jac(c.eta, c.times[i], c.trajectory[i]) - j0)));
  try {
    c.linearization = robust_dichotomy_continuous(phi, base, psi, n0, n1, opt.robust);
  } catch (const Error& e) {
    c.note = std::string("linearization not certified: ") + e.what();
    return;
  }
  const bool verified = c.linearization->verification.passed();
  if (verified && c.theory_applicable && c.sup_distance < c.epsilon) {
    c.status = HyperbolicStatus::Certified;
    c.note.clear();
  } else {
    std::ostringstream msg;
    if (!verified) msg << "linearization dichotomy failed verification; ";
    if (!c.theory_applicable) msg << "eta above cutoff " << c.eta_cutoff << "; ";
    if (!(c.sup_distance < c.epsilon)) msg << "sup distance " << c.sup_distance << " >= eps " << c.epsilon << "; ";
    c.note = msg.str();
  }
}

Vector rk4_flow(const SemilinearProblem& p, double eta, double t0, double t1, const Vector& y0, double h) {
  const auto n = static_cast<long>(std::max(1.0, std::ceil(std::abs(t1 - t0) / h - 1e-9)));
  const double dt = (t1 - t0) / static_cast<double>(n);
  auto rhs = [&](double t, const Vector& y) { return Vector(p.linear_part * y + p.eval(eta, t, y)); };
  Vector y = y0;
  double t = t0;
  for (long i = 0; i < n; ++i) {
    const Vector k1 = rhs(t, y);
    const Vector k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1);
    const Vector k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2);
    const Vector k4 = rhs(t + dt, y + dt * k3);
    y += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t = t0 + static_cast<double>(i + 1) * dt;
    if (!y.allFinite()) throw IntegrationError("rk4 flow blew up");
  }
  return y;
}

}  // namespace rds
