#include "rds/dichotomy.hpp"

#include "rds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rds {

namespace {

SpectralSplit split_with(const Matrix& a, double gap_tol, bool discrete) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DomainError("spectral split needs a square matrix");
  if (!a.allFinite()) throw DomainError("spectral split: non-finite matrix");
  SpectralSplit out;
  out.eigenvalues = a.eigenvalues();
  out.gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i) {
    const auto lam = out.eigenvalues(i);
    const double dist = discrete ? std::abs(std::log(std::abs(lam))) : std::abs(lam.real());
    out.gap = std::min(out.gap, dist);
  }
  if (!(out.gap > gap_tol)) {
    std::ostringstream msg;
    msg << "spectrum meets the splitting curve (gap " << out.gap << " <= " << gap_tol << ")";
    throw NonHyperbolicError(msg.str(), out.gap);
  }
  const auto unstable = [discrete](std::complex<double> z) {
    return discrete ? std::abs(z) > 1.0 : z.real() > 0.0;
  };
  out.unstable = riesz_projector(a, unstable);
  const auto n = a.rows();
  out.stable = Matrix::Identity(n, n) - out.unstable;
  out.stable_dim = 0;
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i)
    if (!unstable(out.eigenvalues(i))) ++out.stable_dim;
  return out;
}

std::size_t node_index(double t, double origin, double spacing, std::size_t count) {
  const double pos = (t - origin) / spacing;
  const double r = std::round(pos);
  if (std::abs(pos - r) > 1e-6 || r < 0 || r > static_cast<double>(count) - 1) {
    std::ostringstream msg;
    msg << "time " << t << " is not a node of [" << origin << ", "
        << origin + spacing * static_cast<double>(count - 1) << "] with spacing " << spacing;
    throw WindowError(msg.str());
  }
  return static_cast<std::size_t>(r);
}

}  // namespace

SpectralSplit spectral_projection(const Matrix& a, double gap_tol) {
  return split_with(a, gap_tol, false);
}

SpectralSplit spectral_projection_discrete(const Matrix& a, double gap_tol) {
  return split_with(a, gap_tol, true);
}

const Matrix& DichotomyCertificate::stable_at(double t) const {
  if (stable.empty()) throw DomainError("empty certificate");
  if (constant()) return stable.front();
  return stable[node_index(t, origin, spacing, stable.size())];
}

Matrix DichotomyCertificate::unstable_at(double t) const {
  const Matrix& p = stable_at(t);
  return Matrix::Identity(p.rows(), p.cols()) - p;
}

double ceil_3sig(double x) {
  if (!(x > 0) || !std::isfinite(x)) return x;
  const double e = std::floor(std::log10(x));
  const double scale = std::pow(10.0, 2.0 - e);
  return std::ceil(x * scale - 1e-9) / scale;
}

DichotomyCertificate autonomous_certificate(const Matrix& a, const ScanOptions& opt) {
  if (!(opt.margin >= 0 && opt.margin < 1)) throw ConfigError("margin must lie in [0, 1)");
  SpectralSplit sp = spectral_projection(a);
  const double beta = sp.gap * (1.0 - opt.margin);
  const double dt = opt.step;
  double length = opt.length;
  if (length <= 0) {
    const double slack_rate = std::max(sp.gap - beta, 1e-3 * sp.gap);
    length = std::clamp(10.0 / slack_rate, 4.0, 400.0);
  }
  const auto n = static_cast<long>(std::ceil(length / dt));
  const Matrix ef = expm(Matrix(dt * a));
  const Matrix eb = expm(Matrix(-dt * a));
  Matrix x = sp.stable;
  Matrix y = sp.unstable;
  double k = std::max(operator_norm(x), operator_norm(y));
  for (long i = 1; i <= n; ++i) {
    x = sp.stable * (ef * x);
    y = sp.unstable * (eb * y);
    const double w = std::exp(beta * static_cast<double>(i) * dt);
    k = std::max(k, std::max(operator_norm(x), operator_norm(y)) * w);
  }
  DichotomyCertificate c;
  c.stable = {sp.stable};
  c.bound = std::max(1.0, ceil_3sig(k));
  c.exponent = beta;
  c.discrete = false;
  std::ostringstream note;
  note << "scan dt=" << dt << " length=" << static_cast<double>(n) * dt
       << " (sampled supremum, rounded up to 3 digits)";
  c.note = note.str();
  return c;
}

DichotomyCertificate autonomous_certificate_discrete(const Matrix& a, const ScanOptions& opt) {
  if (!(opt.margin >= 0 && opt.margin < 1)) throw ConfigError("margin must lie in [0, 1)");
  SpectralSplit sp = spectral_projection_discrete(a);
  const double beta = sp.gap * (1.0 - opt.margin);
  long n = static_cast<long>(opt.length);
  if (n <= 0) {
    n = opt.margin > 0 ? static_cast<long>(std::clamp(10.0 / (sp.gap - beta), 50.0, 2000.0)) : 200;
  }
  const auto d = a.rows();
  Matrix x = sp.stable;
  Matrix y = sp.unstable;
  const RestrictedInverse<double> inv = restricted_inverse(a, sp.unstable, sp.unstable);
  double k = std::max(operator_norm(x), operator_norm(y));
  for (long i = 1; i <= n; ++i) {
    x = sp.stable * (a * x);
    y = inv.inverse * y;
    const double w = std::exp(beta * static_cast<double>(i));
    k = std::max(k, std::max(operator_norm(x), operator_norm(y)) * w);
  }
  (void)d;
  DichotomyCertificate c;
  c.stable = {sp.stable};
  c.bound = std::max(1.0, ceil_3sig(k));
  c.exponent = beta;
  c.discrete = true;
  c.note = "scan steps=" + std::to_string(n);
  return c;
}

SampledEvolution sample_evolution(const DiscreteCocycle& c, std::int64_t n_begin, std::int64_t n_end) {
  if (n_end <= n_begin) throw ConfigError("sample window needs n_end > n_begin");
  SampledEvolution e;
  e.origin = static_cast<double>(n_begin);
  e.spacing = 1.0;
  for (std::int64_t n = n_begin; n < n_end; ++n) e.steps.push_back(c.step(n));
  return e;
}

SampledEvolution sample_evolution(const ContinuousCocycle& c, double t_begin, double t_end,
                                  double spacing) {
  if (!(spacing > 0) || !(t_end > t_begin)) throw ConfigError("bad sampling window");
  const auto per = static_cast<long>(std::ceil(spacing / c.step() - 1e-9));
  const double h = spacing / static_cast<double>(per);
  ContinuousCocycle fine(c.dim(), [c](double t) { return c.generator(t); }, h, c.is_autonomous());
  const auto count = static_cast<long>(std::lround((t_end - t_begin) / spacing));
  SampledEvolution e;
  e.origin = t_begin;
  e.spacing = spacing;
  if (c.is_autonomous()) {
    const Matrix step = propagator(fine, t_begin, spacing);
    e.steps.assign(static_cast<std::size_t>(count), step);
    return e;
  }
  PropagatorTable table(fine, t_begin, t_begin + static_cast<double>(count) * spacing);
  for (long i = 0; i < count; ++i)
    e.steps.push_back(table.product(static_cast<std::size_t>(i * per),
                                    static_cast<std::size_t>((i + 1) * per)));
  return e;
}

VerificationReport verify_dichotomy(const SampledEvolution& evo, const DichotomyCertificate& cert,
                                    const VerifyOptions& opt) {
  const std::size_t n = evo.nodes();
  const int d = evo.dim();
  if (cert.dim() != d) throw DomainError("certificate and evolution dimensions differ");
  std::vector<Matrix> p(n), u(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = cert.stable_at(evo.time(i));
    u[i] = Matrix::Identity(d, d) - p[i];
  }
  VerificationReport r;
  r.slack = opt.slack;
  r.nodes = n;
  r.commutation = {"commutation", 0, opt.commutation_tol, false};
  r.forward_decay = {"forward_decay", 0, opt.slack, false};
  r.backward_decay = {"backward_decay", 0, opt.slack, false};
  r.isomorphism = {"isomorphism", 0, opt.condition_limit, false};

  std::vector<Matrix> back(n - 1);
  bool iso_ok = true;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Matrix& f = evo.steps[i];
    const double scale = std::max(1.0, operator_norm(f));
    r.commutation.value = std::max(r.commutation.value, operator_norm(Matrix(p[i + 1] * f - f * p[i])) / scale);
    RestrictedInverse<double> ri = restricted_inverse(f, u[i], u[i + 1]);
    back[i] = ri.inverse;
    const auto rank_next = range_basis(u[i + 1]).cols();
    if (rank_next != ri.rank) iso_ok = false;
    r.isomorphism.value = std::max(r.isomorphism.value, ri.condition);
    const double resid = ri.rank == 0 ? operator_norm(u[i + 1])
                                      : operator_norm(Matrix(f * ri.inverse - u[i + 1]));
    r.inverse_residual = std::max(r.inverse_residual, resid);
  }
  r.commutation.pass = r.commutation.value <= opt.commutation_tol;
  iso_ok = iso_ok && r.isomorphism.value <= opt.condition_limit && r.inverse_residual <= opt.residual_tol;
  r.isomorphism.pass = iso_ok;
  r.isomorphism_violation = !iso_ok;

  const double k = cert.bound;
  const double a = cert.exponent;
  const std::size_t horizon = opt.horizon == 0 ? n : opt.horizon + 1;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix x = p[i];
    const std::size_t last = std::min(n, i + horizon);
    for (std::size_t j = i; j < last; ++j) {
      if (j > i) x = p[j] * (evo.steps[j - 1] * x);
      const double t = static_cast<double>(j - i) * evo.spacing;
      const double ratio = operator_norm(x) / (k * std::exp(-a * t));
      r.forward_decay.value = std::max(r.forward_decay.value, ratio);
    }
    Matrix y = u[i];
    const std::size_t first = i + 1 >= horizon ? i + 1 - horizon : 0;
    for (std::size_t j = i + 1; j-- > first;) {
      if (j < i) y = back[j] * y;
      const double t = static_cast<double>(i - j) * evo.spacing;
      const double ratio = operator_norm(y) / (k * std::exp(-a * t));
      r.backward_decay.value = std::max(r.backward_decay.value, ratio);
    }
  }
  r.forward_decay.pass = std::isfinite(r.forward_decay.value) && r.forward_decay.value <= opt.slack + 1e-12;
  r.backward_decay.pass = std::isfinite(r.backward_decay.value) && r.backward_decay.value <= opt.slack + 1e-12;
  return r;
}

GreenKernel::GreenKernel(SampledEvolution evo, DichotomyCertificate cert)
    : evo_(std::move(evo)), cert_(std::move(cert)) {
  const std::size_t n = evo_.nodes();
  const int d = evo_.dim();
  stable_.resize(n);
  unstable_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    stable_[i] = cert_.stable_at(evo_.time(i));
    unstable_[i] = Matrix::Identity(d, d) - stable_[i];
  }
  back_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    back_[i] = restricted_inverse(evo_.steps[i], unstable_[i], unstable_[i + 1]).inverse;
}

std::size_t GreenKernel::node(double t) const {
  return node_index(t, evo_.origin, evo_.spacing, evo_.nodes());
}

Matrix GreenKernel::operator()(double t, double s) const {
  const std::size_t i = node(t);
  const std::size_t j = node(s);
  if (i >= j) {
    Matrix x = stable_[j];
    for (std::size_t k = j; k < i; ++k) x = stable_[k + 1] * (evo_.steps[k] * x);
    return x;
  }
  Matrix y = unstable_[j];
  for (std::size_t k = j; k-- > i;) y = back_[k] * y;
  return -y;
}

Matrix GreenKernel::backward_limit(double s) const { return -unstable_[node(s)]; }

Matrix green_eval(const GreenKernel& g, double t, double s) { return g(t, s); }

double projection_distance(const DichotomyCertificate& a, const DichotomyCertificate& b) {
  if (a.dim() != b.dim()) throw DomainError("certificates have different dimensions");
  if (a.constant() && b.constant()) return operator_norm(Matrix(a.stable.front() - b.stable.front()));
  const DichotomyCertificate& grid = a.constant() ? b : a;
  const DichotomyCertificate& other = a.constant() ? a : b;
  double best = 0;
  std::size_t common = 0;
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    const double t = grid.time(i);
    try {
      const Matrix& q = other.stable_at(t);
      best = std::max(best, operator_norm(Matrix(grid.stable[i] - q)));
      ++common;
    } catch (const WindowError&) {
    }
  }
  if (common == 0) throw WindowError("certificates share no common nodes");
  return best;
}

double projection_continuity_bound(double alpha_a, double alpha_b, double eps) {
  if (!(alpha_a > 0 && alpha_b > 0)) throw DomainError("exponents must be positive");
  return (std::exp(-alpha_a) + std::exp(-alpha_b)) / (1.0 - std::exp(-(alpha_a + alpha_b))) * eps;
}

}  // namespace rds
