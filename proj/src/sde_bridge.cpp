#include "rds/sde_bridge.hpp"

#include "rds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rds {

NoisePattern parse_noise_pattern(const std::string& s) {
  if (s == "both") return NoisePattern::Both;
  if (s == "position") return NoisePattern::Position;
  if (s == "velocity") return NoisePattern::Velocity;
  throw ConfigError("unknown noise pattern '" + s + "' (expected both, position or velocity)");
}

const char* to_string(NoisePattern p) {
  switch (p) {
    case NoisePattern::Both: return "both";
    case NoisePattern::Position: return "position";
    case NoisePattern::Velocity: return "velocity";
  }
  return "both";
}

Vector StratonovichSpec::shape() const {
  if (noise_shape.size() == 0) return Vector::Ones(dim());
  if (noise_shape.size() != dim()) throw DomainError("noise shape has the wrong dimension");
  for (Eigen::Index i = 0; i < noise_shape.size(); ++i)
    if (noise_shape(i) != 0.0 && noise_shape(i) != 1.0) throw DomainError("noise shape entries must be 0 or 1");
  return noise_shape;
}

double RandomOde::exponent(double t) const { return kappa.value(t) * (*ou)(t); }

Vector RandomOde::scaling(double eta, double t) const {
  const double s = eta * exponent(t);
  return (s * shape.array()).exp().matrix();
}

Matrix RandomOde::noise_coefficient(double eta, double t) const {
  const double c = eta * (kappa.value(t) - kappa.derivative(t)) * (*ou)(t);
  return Matrix((c * shape).asDiagonal());
}

Vector RandomOde::to_original(double eta, double t, const Vector& v) const {
  return scaling(eta, t).cwiseProduct(v);
}

Vector RandomOde::to_transformed(double eta, double t, const Vector& y) const {
  return y.cwiseQuotient(scaling(eta, t));
}

RandomOde transform(const StratonovichSpec& s, std::shared_ptr<const OuProcess> ou) {
  if (!ou) throw DomainError("transform needs an OU process");
  if (!s.f) throw DomainError("nonlinearity must be set");
  RandomOde r;
  r.ou = std::move(ou);
  r.kappa = s.kappa;
  r.shape = s.shape();
  const bool uniform = (r.shape.array() == r.shape(0)).all();
  const Matrix b = s.linear_part;
  const VectorField f = s.f;
  const JacobianField jf = s.f_jacobian;
  const auto ouv = r.ou;
  const Kappa kappa = s.kappa;
  const Vector shape = r.shape;

  SemilinearProblem& p = r.problem;
  p.linear_part = b;
  p.f0 = f;
  p.f0_jacobian = jf;
  p.equilibrium = s.equilibrium.size() ? s.equilibrium : Vector(Vector::Zero(s.dim()));
  p.radius = s.radius;
  // E^{-1} B E - B has entries b_ij (e_j / e_i - 1); it vanishes for a uniform shape.
  auto conj = [b, uniform](const Vector& e) -> Matrix {
    if (uniform) return Matrix::Zero(b.rows(), b.cols());
    Matrix m = b;
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) m(i, j) = b(i, j) * (e(j) / e(i) - 1.0);
    return m;
  };
  p.f_eta = [=](double eta, double t, const Vector& v) -> Vector {
    if (eta == 0.0) return f(v);
    const double z = (*ouv)(t);
    const Vector e = (eta * kappa.value(t) * z * shape.array()).exp().matrix();
    const double c = eta * (kappa.value(t) - kappa.derivative(t)) * z;
    return conj(e) * v + f(e.cwiseProduct(v)).cwiseQuotient(e) + c * shape.cwiseProduct(v);
  };
  p.f_eta_jacobian = [=](double eta, double t, const Vector& v) -> Matrix {
    const double z = eta == 0.0 ? 0.0 : (*ouv)(t);
    const Vector e = (eta * kappa.value(t) * z * shape.array()).exp().matrix();
    const double c = eta * (kappa.value(t) - kappa.derivative(t)) * z;
    const Vector ev = e.cwiseProduct(v);
    const Matrix j = jf ? jf(ev) : numerical_jacobian(f, ev);
    Matrix out = e.cwiseInverse().asDiagonal() * j * e.asDiagonal();
    out += conj(e);
    out.diagonal() += c * shape;
    return out;
  };
  return r;
}

RandomOde transform(const StratonovichSpec& s, const SamplePath& path, double t_begin, double t_end,
                    double tail_tol) {
  return transform(s, std::make_shared<const OuProcess>(path, t_begin, t_end, tail_tol));
}

std::vector<Vector> inverse_transform(const RandomOde& ode, double eta, const std::vector<double>& times,
                                      const std::vector<Vector>& v) {
  if (times.size() != v.size()) throw DomainError("trajectory and times have different lengths");
  std::vector<Vector> y;
  y.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y.push_back(ode.to_original(eta, times[i], v[i]));
  return y;
}

SamplePath extend_for_ou(SamplePath p, double t_begin, double t_end, double tail_tol) {
  const double h = p.grid().h();
  for (int round = 0; round < 8; ++round) {
    try {
      OuProcess probe(p, t_begin, t_end, tail_tol);
      return p;
    } catch (const WindowError& e) {
      if (!p.can_extend()) throw;
      const long more = static_cast<long>(std::ceil(std::max(e.missing_length, 1.0) / h)) + 64;
      p = p.extend(p.grid().left() + more, p.grid().right());
    }
  }
  throw WindowError("could not extend the path far enough for the OU tail");
}

SamplePath ou_ready_path(std::uint64_t seed, double t_begin, double t_end, double h, double tail_tol) {
  const double lo = std::min(t_begin, -h) - 40.0;
  const double hi = std::max(t_end, h);
  return extend_for_ou(SamplePath::wiener(TimeGrid::from_bounds(lo, hi, h), seed), t_begin, t_end, tail_tol);
}

namespace {

Vector vec1(double x) { return Vector::Constant(1, x); }

}  // namespace

SemilinearProblem cubic_ou_model(std::shared_ptr<const OuProcess> ou, const Kappa& kappa, double radius) {
  SemilinearProblem p;
  p.linear_part = Matrix::Constant(1, 1, -1.0);
  p.f0 = [](const Vector& y) { return vec1(y(0) * y(0) * y(0)); };
  p.f0_jacobian = [](const Vector& y) { return Matrix(Matrix::Constant(1, 1, 3 * y(0) * y(0))); };
  auto c = [ou, kappa](double t) { return (kappa.value(t) - kappa.derivative(t)) * (*ou)(t); };
  p.f_eta = [c](double eta, double t, const Vector& y) {
    const double n = eta == 0.0 ? 0.0 : eta * c(t);
    return vec1(y(0) * y(0) * y(0) + n * (1 + y(0)));
  };
  p.f_eta_jacobian = [c](double eta, double t, const Vector& y) {
    const double n = eta == 0.0 ? 0.0 : eta * c(t);
    return Matrix(Matrix::Constant(1, 1, 3 * y(0) * y(0) + n));
  };
  p.equilibrium = vec1(0);
  p.radius = radius;
  return p;
}

SemilinearProblem additive_ou_model(std::shared_ptr<const OuProcess> ou, const Kappa& kappa, double radius) {
  SemilinearProblem p;
  p.linear_part = Matrix::Constant(1, 1, -1.0);
  p.f0 = [](const Vector&) { return vec1(0); };
  p.f0_jacobian = [](const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
  p.f_eta = [ou, kappa](double eta, double t, const Vector&) {
    return vec1(eta == 0.0 ? 0.0 : eta * (kappa.value(t) - kappa.derivative(t)) * (*ou)(t));
  };
  p.f_eta_jacobian = [](double, double, const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
  p.equilibrium = vec1(0);
  p.radius = radius;
  return p;
}

WaveSystem build_wave_system(int modes, double damping, const ScalarFunction& f, const ScalarFunction& df,
                             int quadrature) {
  if (modes < 1) throw ConfigError("wave system needs at least one mode");
  if (!(damping > 0)) throw ConfigError("wave damping must be positive");
  if (!f || !df) throw ConfigError("wave nonlinearity and its derivative must be set");
  const int q = quadrature > 0 ? quadrature : 2 * modes + 1;
  if (q < modes) throw ConfigError("wave quadrature needs at least as many nodes as modes");
  WaveSystem w;
  w.modes = modes;
  w.damping = damping;
  w.quadrature = q;
  const int n = modes;
  w.synthesis.resize(q, n);
  for (int j = 0; j < q; ++j)
    for (int k = 0; k < n; ++k) {
      const double x = static_cast<double>(j + 1) / (q + 1);
      w.synthesis(j, k) = std::sqrt(2.0) * std::sin((k + 1) * M_PI * x);
    }
  w.analysis = w.synthesis.transpose() / static_cast<double>(q + 1);
  const double slope = df(0.0);
  for (int k = 1; k <= n; ++k) {
    const double lam = (k * M_PI) * (k * M_PI);
    w.lambda.push_back(lam);
    if (std::abs(lam - slope) <= 1e-12 * std::max(1.0, lam)) {
      std::ostringstream msg;
      msg << "equilibrium is not hyperbolic: lambda_" << k << " = " << lam << " equals f'(0)";
      throw NonHyperbolicError(msg.str(), 0.0);
    }
  }

  Matrix b = Matrix::Zero(2 * n, 2 * n);
  b.topRightCorner(n, n).setIdentity();
  for (int k = 0; k < n; ++k) {
    b(n + k, k) = -w.lambda[static_cast<std::size_t>(k)];
    b(n + k, n + k) = -damping;
  }
  const Matrix s = w.synthesis;
  const Matrix pa = w.analysis;
  StratonovichSpec& spec = w.spec;
  spec.linear_part = b;
  spec.f = [s, pa, f, n](const Vector& y) {
    const Vector u = s * y.head(n);
    Vector out = Vector::Zero(2 * n);
    out.tail(n) = pa * u.unaryExpr(f);
    return out;
  };
  spec.f_jacobian = [s, pa, df, n](const Vector& y) {
    const Vector u = s * y.head(n);
    Matrix j = Matrix::Zero(2 * n, 2 * n);
    j.bottomLeftCorner(n, n) = pa * u.unaryExpr(df).asDiagonal() * s;
    return j;
  };
  spec.equilibrium = Vector::Zero(2 * n);
  if (spec.f(spec.equilibrium).norm() > 1e-12) throw DomainError("wave nonlinearity must vanish at zero");
  w.linearization = b + spec.f_jacobian(spec.equilibrium);
  w.split = spectral_projection(w.linearization);
  return w;
}

namespace {

Vector pattern_shape(NoisePattern p, int n) {
  Vector d = Vector::Ones(2 * n);
  if (p == NoisePattern::Position) d.tail(n).setZero();
  if (p == NoisePattern::Velocity) d.head(n).setZero();
  return d;
}

}  // namespace

WaveDemoReport run_wave_demo(const WaveDemoOptions& opt) {
  WaveSystem w = build_wave_system(opt.modes, opt.damping, opt.f, opt.df);
  WaveDemoReport rep;
  rep.modes = w.modes;
  rep.damping = w.damping;
  rep.gap = w.split.gap;
  StratonovichSpec spec = w.spec;
  spec.kappa = opt.kappa;
  spec.noise_shape = pattern_shape(opt.pattern, w.modes);
  const HyperbolicOptions& ho = opt.hyperbolic;
  const SamplePath path = ou_ready_path(opt.seed, ho.t_begin, ho.t_end, ho.h);
  const RandomOde ode = transform(spec, path, ho.t_begin, ho.t_end);
  rep.ou_max_abs = ode.ou->max_abs();

  HyperbolicOptions h = ho;
  h.require_contraction = false;
  h.calibration = calibrate_eta(ode.problem, h);
  for (double eta : opt.eta_grid) {
    WaveDemoRow row;
    row.eta = eta;
    row.seed = opt.seed;
    row.alpha_tilde = std::numeric_limits<double>::quiet_NaN();
    row.M_bound = std::numeric_limits<double>::quiet_NaN();
    try {
      HyperbolicSolutionCertificate c = find_hyperbolic_solution(ode.problem, eta, h);
      certify_hyperbolic(ode.problem, c, opt.certify);
      row.sup_dist_v = c.sup_distance;
      const auto y = inverse_transform(ode, eta, c.times, c.trajectory);
      row.sup_dist_y = 0;
      for (std::size_t i = c.interior_first; i <= c.interior_last; ++i)
        row.sup_dist_y = std::max(row.sup_dist_y, (y[i] - spec.equilibrium).norm());
      row.certified = c.status == HyperbolicStatus::Certified;
      row.status = to_string(c.status);
      row.eta_cutoff = c.eta_cutoff;
      row.epsilon = c.epsilon;
      row.sup_linear_perturbation = c.sup_linear_perturbation;
      row.note = c.note;
      if (c.linearization) {
        row.alpha_tilde = c.linearization->constants.alpha_tilde;
        row.M_bound = c.linearization->certificate.bound;
      }
    } catch (const Error& e) {
      row.status = "failed";
      row.note = e.what();
      row.sup_dist_v = row.sup_dist_y = std::numeric_limits<double>::quiet_NaN();
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace rds
