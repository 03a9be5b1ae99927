#include "rds/robustness.hpp"

#include "rds/greens.hpp"
#include "rds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace rds {

double delta_threshold(double alpha) {
  if (!(alpha > 0)) throw DomainError("exponent must be positive");
  const double q = std::exp(-alpha);
  return (1 - q) / (1 + q);
}

GronwallConstants gronwall_constants(double a, double delta, double d) {
  if (!(a > 0) || delta < 0 || !(d >= 1)) throw DomainError("gronwall constants need a > 0, delta >= 0, D >= 1");
  const double limit = delta_threshold(a) / d;
  if (!(delta < limit)) {
    std::ostringstream msg;
    msg << "delta " << delta << " is not below D^{-1}(1 - e^{-a})/(1 + e^{-a}) = " << limit;
    throw ThresholdError(msg.str(), delta, limit);
  }
  const double sh = std::sinh(a);
  const double ch = std::cosh(a);
  const double radicand = sh * (sh - 2 * delta);
  if (radicand < 0) throw ThresholdError("gronwall radicand is negative", delta, limit);
  // cosh a - sqrt(cosh^2 a - 1 - 2 delta sinh a), rationalized to avoid cancellation.
  const double base = (1 + 2 * delta * sh) / (ch + std::sqrt(radicand));
  GronwallConstants g;
  g.a_tilde = -std::log(base);
  g.b_tilde = g.a_tilde + std::log1p(2 * delta * d * sh);
  return g;
}

RobustConstants robust_constants(double K, double alpha, double delta) {
  if (!(K >= 1)) throw DomainError("dichotomy bound must be >= 1");
  if (!(alpha > 0)) throw DomainError("exponent must be positive");
  if (delta < 0) throw DomainError("delta must be nonnegative");
  RobustConstants c;
  c.K = K;
  c.alpha = alpha;
  c.delta = delta;
  c.threshold = delta_threshold(alpha);
  if (!(delta < c.threshold)) {
    std::ostringstream msg;
    msg << "delta " << delta << " is not below the threshold " << c.threshold;
    throw ThresholdError(msg.str(), delta, c.threshold);
  }
  const double q = std::exp(-alpha);
  c.rho = delta * (1 + q) / (1 - q);
  const GronwallConstants g = gronwall_constants(alpha, delta, 1.0);
  c.alpha_tilde = g.a_tilde;
  c.beta_tilde = c.alpha_tilde + std::log1p(2 * delta * std::sinh(alpha));
  const double d1 = 1 - delta * q / (1 - std::exp(-alpha - c.alpha_tilde));
  const double d2 = 1 - delta * std::exp(-c.beta_tilde) / (1 - std::exp(-alpha - c.beta_tilde));
  if (!(d1 > 0) || !(d2 > 0)) throw ThresholdError("robust constants are not finite for this delta", delta, c.threshold);
  c.D1 = 1 / d1;
  c.D2 = 1 / d2;
  c.M = K * (1 + delta / ((1 - c.rho) * (1 - q))) * std::max(c.D1, c.D2);
  return c;
}

namespace {

void check_delta(double delta, double threshold, double margin) {
  if (delta > margin * threshold) {
    std::ostringstream msg;
    msg << "delta_eff = " << delta << " exceeds " << margin << " x threshold " << threshold;
    throw ThresholdError(msg.str(), delta, threshold);
  }
}

long auto_padding(const RobustConstants& c) {
  if (c.delta == 0) return 2;
  const double num = std::log(std::max(1.0, c.K * c.M * c.delta) / 1e-13);
  return std::clamp(static_cast<long>(std::ceil(num / (c.alpha + c.alpha_tilde))), 4L, 200L);
}

}  // namespace

RobustDichotomy robust_dichotomy_discrete(const DiscreteCocycle& phi, const DichotomyCertificate& base,
                                          const DiscreteCocycle& psi, std::int64_t n0, std::int64_t n1,
                                          const RobustOptions& opt) {
  if (n1 <= n0) throw ConfigError("robust window needs n1 > n0");
  if (phi.dim() != psi.dim() || base.dim() != phi.dim()) throw DomainError("dimension mismatch");
  const double K = base.bound;
  const double thr = delta_threshold(base.exponent);

  RobustDichotomy out;
  // Padding depends on delta, which depends on the window: measure over a
  // generous window first when the padding is automatic.
  long pad = opt.padding;
  auto measure = [&](long p) {
    double s = 0;
    for (std::int64_t n = n0 - p; n <= n1 + p; ++n)
      s = std::max(s, operator_norm(Matrix(psi.step(n) - phi.step(n))));
    return s;
  };
  double sup_b = measure(pad < 0 ? 0 : pad);
  double delta = opt.delta_override ? *opt.delta_override : K * sup_b;
  check_delta(delta, thr, opt.threshold_margin);
  RobustConstants c = robust_constants(K, base.exponent, delta);
  if (pad < 0) {
    pad = auto_padding(c);
    sup_b = measure(pad);
    delta = opt.delta_override ? std::max(*opt.delta_override, K * sup_b) : K * sup_b;
    check_delta(delta, thr, opt.threshold_margin);
    c = robust_constants(K, base.exponent, delta);
  }
  out.constants = c;
  out.delta_eff = delta;
  out.sup_perturbation = sup_b;
  out.padding = pad;

  AdmissibilityOperator op(
      phi, base, [&](std::int64_t n) { return Matrix(psi.step(n) - phi.step(n)); }, n0 - pad, n1 + pad);

  DichotomyCertificate& cert = out.certificate;
  cert.origin = static_cast<double>(n0);
  cert.spacing = 1.0;
  cert.bound = c.M;
  cert.exponent = c.alpha_tilde;
  cert.discrete = true;
  cert.note = "impulse projections, padding " + std::to_string(pad);
  for (std::int64_t m = n0; m <= n1; ++m) {
    auto [ps, pu] = op.impulse_projection(m, opt.impulse_tol);
    out.idempotency_error = std::max(out.idempotency_error, operator_norm(Matrix(ps * ps - ps)));
    cert.stable.push_back(std::move(ps));
  }
  VerifyOptions vo;
  vo.slack = opt.verify_slack;
  out.verification = verify_dichotomy(sample_evolution(psi, n0, n1), cert, vo);
  return out;
}

namespace {

// least-squares slope of log ||x_k|| against k = 0, 1, ...
double log_slope(const std::vector<double>& norms) {
  const double n = static_cast<double>(norms.size());
  double sk = 0, sy = 0, skk = 0, sky = 0;
  for (std::size_t k = 0; k < norms.size(); ++k) {
    const double x = static_cast<double>(k);
    const double y = std::log(norms[k]);
    sk += x;
    sy += y;
    skk += x * x;
    sky += x * y;
  }
  return (n * sky - sk * sy) / (n * skk - sk * sk);
}

// slowest decay over the columns of a basis; steps maps a vector one node on
double slowest_decay(const Matrix& basis, long count, const std::function<Vector(long, const Vector&)>& step) {
  double rate = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Vector x = basis.col(j);
    std::vector<double> norms{x.norm()};
    for (long k = 0; k < count; ++k) {
      x = step(k, x);
      norms.push_back(x.norm());
      if (!(norms.back() > 1e-250)) break;
    }
    if (norms.size() >= 3) rate = std::min(rate, -log_slope(norms));
  }
  return rate;
}

}  // namespace

OrbitDiagnostic orbit_diagnostic(const DiscreteCocycle& psi, const RobustDichotomy& r, std::int64_t n0,
                                 std::int64_t n1, double rate_slack) {
  if (!(n0 < n1)) throw DomainError("orbit diagnostic needs n0 < n1");
  if (!(rate_slack >= 0 && rate_slack < 1)) throw DomainError("rate slack must lie in [0, 1)");
  OrbitDiagnostic d;
  d.node = n0 + (n1 - n0) / 2;
  const std::int64_t m = d.node;
  const Matrix ps = r.certificate.stable_at(static_cast<double>(m));
  const Matrix pu = Matrix::Identity(ps.rows(), ps.cols()) - ps;
  d.forward_rate = slowest_decay(range_basis(ps), static_cast<long>(n1 - m),
                                 [&](long k, const Vector& x) { return Vector(psi.step(m + k) * x); });
  d.backward_rate = slowest_decay(range_basis(pu), static_cast<long>(m - n0), [&](long k, const Vector& x) {
    return Vector(psi.step(m - k - 1).partialPivLu().solve(x));
  });
  d.forward_required = (1 - rate_slack) * r.constants.alpha_tilde;
  d.backward_required = (1 - rate_slack) * r.constants.beta_tilde;
  d.forward_pass = d.forward_rate >= d.forward_required;
  d.backward_pass = d.backward_rate >= d.backward_required;
  return d;
}

LiftResult lift_certificate(const ContinuousCocycle& psi, const DichotomyCertificate& discrete, double base_alpha,
                            int subdivisions) {
  if (subdivisions <= 0) throw ConfigError("subdivisions must be positive");
  if (discrete.constant()) throw DomainError("lift needs a certificate with explicit nodes");
  const int d = psi.dim();
  const double M = discrete.bound;
  const double at = discrete.exponent;
  const auto per = static_cast<long>(std::ceil(1.0 / subdivisions / psi.step() - 1e-9));
  const double h = 1.0 / subdivisions / static_cast<double>(per);
  ContinuousCocycle fine(d, [psi](double t) { return psi.generator(t); }, h, psi.is_autonomous());
  const double t0 = discrete.origin;
  const std::size_t nodes = discrete.nodes();
  PropagatorTable table(fine, t0, t0 + static_cast<double>(nodes));
  const auto per_unit = static_cast<std::size_t>(subdivisions * per);

  LiftResult out;
  double sup_a = 0, sup_at = 0;
  DichotomyCertificate& c = out.certificate;
  c.origin = t0;
  c.spacing = 1.0 / subdivisions;
  c.discrete = false;
  c.exponent = at;
  for (std::size_t n = 0; n < nodes; ++n) {
    Matrix acc = Matrix::Identity(d, d);
    const Matrix& p = discrete.stable[n];
    c.stable.push_back(p);
    // The evolution beyond the last node is only needed for the bound.
    for (std::size_t j = 0; j < per_unit; ++j) {
      acc = table.step(n * per_unit + j) * acc;
      const double tau = static_cast<double>(j + 1) * h;
      const double nrm = operator_norm(acc);
      sup_a = std::max(sup_a, nrm * std::exp(base_alpha * tau));
      sup_at = std::max(sup_at, nrm * std::exp(at * tau));
      if (n + 1 < nodes && (j + 1) % static_cast<std::size_t>(per) == 0 && j + 1 < per_unit) {
        Eigen::PartialPivLU<Matrix> lu(acc);
        c.stable.push_back(acc * p * lu.inverse());
      }
    }
    if (n + 1 == nodes) break;
  }
  sup_a = std::max(sup_a, 1.0);
  sup_at = std::max(sup_at, 1.0);
  out.bound_alpha = M * sup_a;
  out.bound_alpha_tilde = M * sup_at;
  c.bound = out.bound_alpha_tilde;
  c.note = "lifted from integer nodes";
  return out;
}

double continuous_delta(const ContinuousCocycle& phi, const ContinuousCocycle& psi, double K, double s0, double s1,
                        int samples_per_unit) {
  const int d = phi.dim();
  const double dt = 1.0 / samples_per_unit;
  const double h = std::min(phi.step(), psi.step());
  const auto per = static_cast<long>(std::ceil(dt / h - 1e-9));
  const double hh = dt / static_cast<double>(per);
  ContinuousCocycle fphi(d, [phi](double t) { return phi.generator(t); }, hh, phi.is_autonomous());
  ContinuousCocycle fpsi(d, [psi](double t) { return psi.generator(t); }, hh, psi.is_autonomous());
  PropagatorTable tphi(fphi, s0, s1 + 1.0);
  PropagatorTable tpsi(fpsi, s0, s1 + 1.0);
  const auto per_unit = static_cast<std::size_t>(samples_per_unit * per);
  const std::size_t last = tphi.index_of(s1);
  double sup = 0;
  for (std::size_t s = 0; s <= last; s += static_cast<std::size_t>(per)) {
    Matrix a = Matrix::Identity(d, d), b = Matrix::Identity(d, d);
    for (std::size_t j = 0; j < per_unit; ++j) {
      a = tphi.step(s + j) * a;
      b = tpsi.step(s + j) * b;
      if ((j + 1) % static_cast<std::size_t>(per) == 0) sup = std::max(sup, operator_norm(Matrix(a - b)));
    }
  }
  return K * sup;
}

RobustDichotomy robust_dichotomy_continuous(const ContinuousCocycle& phi, const DichotomyCertificate& base,
                                            const ContinuousCocycle& psi, std::int64_t n0, std::int64_t n1,
                                            const ContinuousRobustOptions& opt) {
  if (n1 <= n0) throw ConfigError("robust window needs n1 > n0");
  if (phi.dim() != psi.dim() || base.dim() != phi.dim()) throw DomainError("dimension mismatch");
  const double K = base.bound;
  const double thr = delta_threshold(base.exponent);
  // Measure delta on a provisional padding, then widen if the constants ask for more.
  long pad = opt.discrete.padding;
  double delta = 0;
  if (pad >= 0) {
    delta = continuous_delta(phi, psi, K, static_cast<double>(n0 - pad), static_cast<double>(n1 + pad),
                             opt.delta_samples_per_unit);
    check_delta(delta, thr, opt.discrete.threshold_margin);
  } else {
    pad = std::clamp(static_cast<long>(std::ceil(std::log(1e13 * K) / (2 * base.exponent))), 4L, 200L);
    for (int round = 0; round < 4; ++round) {
      delta = continuous_delta(phi, psi, K, static_cast<double>(n0 - pad), static_cast<double>(n1 + pad),
                               opt.delta_samples_per_unit);
      check_delta(delta, thr, opt.discrete.threshold_margin);
      const long need = auto_padding(robust_constants(K, base.exponent, delta));
      if (need <= pad) break;
      pad = need;
    }
  }
  const double s0 = static_cast<double>(n0 - pad);
  const double s1 = static_cast<double>(n1 + pad);

  DichotomyCertificate dbase = base;
  dbase.discrete = true;
  if (!base.constant()) {
    dbase.stable.clear();
    dbase.origin = s0;
    dbase.spacing = 1.0;
    for (std::int64_t n = n0 - pad; n <= n1 + pad; ++n) dbase.stable.push_back(base.stable_at(static_cast<double>(n)));
  }
  // Time-one maps on the padded window, sharing one table per cocycle.
  PropagatorTable tphi(phi, s0, s1 + 1.0);
  PropagatorTable tpsi(psi, s0, s1 + 1.0);
  const auto per = static_cast<std::size_t>(std::lround(1.0 / phi.step()));
  const auto per_psi = static_cast<std::size_t>(std::lround(1.0 / psi.step()));
  std::vector<Matrix> mphi, mpsi;
  for (std::int64_t n = n0 - pad; n <= n1 + pad; ++n) {
    const auto i = static_cast<std::size_t>(n - (n0 - pad));
    mphi.push_back(tphi.product(i * per, (i + 1) * per));
    mpsi.push_back(tpsi.product(i * per_psi, (i + 1) * per_psi));
  }
  const std::int64_t lo = n0 - pad;
  auto pick = [lo](const std::vector<Matrix>& v) {
    return [&v, lo](std::int64_t n) {
      const auto i = n - lo;
      if (i < 0 || i >= static_cast<std::int64_t>(v.size())) throw WindowError("time-one map outside window");
      return v[static_cast<std::size_t>(i)];
    };
  };
  DiscreteCocycle dphi(phi.dim(), pick(mphi));
  DiscreteCocycle dpsi(psi.dim(), pick(mpsi));
  RobustOptions ro = opt.discrete;
  ro.padding = pad;
  ro.delta_override = delta;
  ro.verify_slack = opt.discrete.verify_slack;
  RobustDichotomy out = robust_dichotomy_discrete(dphi, dbase, dpsi, n0, n1, ro);
  out.delta_eff = delta;

  LiftResult lift = lift_certificate(psi, out.certificate, base.exponent, opt.subdivisions);
  out.lift_bound_alpha = lift.bound_alpha;
  out.lift_bound_alpha_tilde = lift.bound_alpha_tilde;
  out.certificate = lift.certificate;
  VerifyOptions vo;
  vo.slack = opt.verify_slack;
  vo.horizon = opt.verify_horizon;
  out.verification = verify_dichotomy(
      sample_evolution(psi, static_cast<double>(n0), static_cast<double>(n1), 1.0 / opt.subdivisions),
      out.certificate, vo);
  return out;
}

LinearPerturbationCheck linear_random_perturbation_check(const Matrix& a, const DichotomyCertificate& cert,
                                                         const std::function<Matrix(double)>& b,
                                                         const TimeGrid& window, int samples_per_unit,
                                                         double margin) {
  LinearPerturbationCheck r;
  r.K = cert.bound;
  r.alpha = cert.exponent;
  r.threshold = delta_threshold(cert.exponent);
  const double dt = 1.0 / samples_per_unit;
  const Matrix e = expm(Matrix(dt * a));
  Matrix acc = Matrix::Identity(a.rows(), a.cols());
  r.L = 1.0;
  for (int i = 0; i < samples_per_unit; ++i) {
    acc = e * acc;
    r.L = std::max(r.L, operator_norm(acc));
  }
  // Samples of B on the fine grid covering [t_min, t_max + 1].
  const double t0 = window.t_min();
  const auto total = static_cast<std::size_t>(std::ceil((window.t_max() + 1.0 - t0) / dt - 1e-9));
  std::vector<Matrix> samples(total + 1);
  for (std::size_t i = 0; i <= total; ++i) samples[i] = b(t0 + static_cast<double>(i) * dt);
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window.h() / dt)));
  const auto last = static_cast<std::size_t>(std::lround((window.t_max() - t0) / dt));
  for (std::size_t s = 0; s <= last; s += stride) {
    Matrix integral = Matrix::Zero(a.rows(), a.cols());
    for (int j = 0; j < samples_per_unit; ++j) {
      integral += 0.5 * dt * (samples[s + j] + samples[s + j + 1]);
      r.eps_measured = std::max(r.eps_measured, operator_norm(integral));
    }
  }
  r.L1 = r.L * std::exp(r.L * r.eps_measured);
  r.product = r.K * r.eps_measured * r.L * r.L1;
  const double target = margin * r.threshold;
  auto f = [&](double eps) { return r.K * eps * r.L * r.L * std::exp(r.L * eps) - target; };
  double lo = 0, hi = 1;
  while (f(hi) < 0) hi *= 2;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  r.eps_allowed = lo;
  r.admissible = r.product < target;
  return r;
}

}  // namespace rds
