#include "rds/cocycle.hpp"

#include "rds/linalg.hpp"

#include <cmath>
#include <sstream>

namespace rds {

namespace {

void check_step_matrix(const Matrix& m, int dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    std::ostringstream msg;
    msg << what << ": expected " << dim << "x" << dim << ", got " << m.rows() << "x" << m.cols();
    throw DomainError(msg.str());
  }
  if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
}

}  // namespace

DiscreteCocycle::DiscreteCocycle(int dim, std::function<Matrix(std::int64_t)> step)
    : dim_(dim), step_(std::move(step)) {
  if (dim <= 0) throw DomainError("cocycle dimension must be positive");
}

DiscreteCocycle DiscreteCocycle::constant(const Matrix& a) {
  check_step_matrix(a, static_cast<int>(a.rows()), "constant cocycle");
  return DiscreteCocycle(static_cast<int>(a.rows()), [a](std::int64_t) { return a; });
}

DiscreteCocycle DiscreteCocycle::periodic(std::vector<Matrix> mats) {
  if (mats.empty()) throw DomainError("periodic cocycle needs at least one matrix");
  const int d = static_cast<int>(mats.front().rows());
  for (const auto& m : mats) check_step_matrix(m, d, "periodic cocycle");
  const auto p = static_cast<std::int64_t>(mats.size());
  return DiscreteCocycle(d, [mats = std::move(mats), p](std::int64_t n) {
    return mats[static_cast<std::size_t>(((n % p) + p) % p)];
  });
}

Matrix DiscreteCocycle::step(std::int64_t n) const {
  Matrix m = step_(n);
  check_step_matrix(m, dim_, "cocycle step");
  return m;
}

DiscreteCocycle DiscreteCocycle::shifted(std::int64_t k) const {
  auto f = step_;
  return DiscreteCocycle(dim_, [f, k](std::int64_t n) { return f(n + k); });
}

Matrix compose_discrete(const DiscreteCocycle& c, std::int64_t n, std::int64_t start) {
  Matrix out = Matrix::Identity(c.dim(), c.dim());
  if (n >= 0) {
    for (std::int64_t i = 0; i < n; ++i) out = c.step(start + i) * out;
    return out;
  }
  for (std::int64_t i = 1; i <= -n; ++i) {
    Eigen::FullPivLU<Matrix> lu(c.step(start - i));
    if (!lu.isInvertible()) throw IsomorphismError("backward composition of a singular step");
    out = lu.inverse() * out;
  }
  return out;
}

ContinuousCocycle::ContinuousCocycle(int dim, std::function<Matrix(double)> generator, double step,
                                     bool autonomous)
    : dim_(dim), gen_(std::move(generator)), step_(step), autonomous_(autonomous) {
  if (dim <= 0) throw DomainError("cocycle dimension must be positive");
  if (!(step > 0)) throw ConfigError("integration step must be positive");
}

ContinuousCocycle ContinuousCocycle::autonomous(const Matrix& a, double step) {
  check_step_matrix(a, static_cast<int>(a.rows()), "generator");
  return ContinuousCocycle(static_cast<int>(a.rows()), [a](double) { return a; }, step, true);
}

Matrix ContinuousCocycle::generator(double t) const {
  Matrix a = gen_(t);
  if (a.rows() != dim_ || a.cols() != dim_) throw DomainError("generator has wrong shape");
  if (!a.allFinite()) {
    std::ostringstream msg;
    msg << "generator is not finite at t = " << t;
    throw IntegrationError(msg.str());
  }
  return a;
}

ContinuousCocycle ContinuousCocycle::shifted(double s) const {
  auto g = gen_;
  return ContinuousCocycle(dim_, [g, s](double t) { return g(t + s); }, step_, autonomous_);
}

Matrix magnus_step(const ContinuousCocycle& c, double t, double h) {
  if (c.is_autonomous()) return expm(Matrix(h * c.generator(t)));
  static const double r = std::sqrt(3.0) / 6.0;
  const Matrix a1 = c.generator(t + (0.5 - r) * h);
  const Matrix a2 = c.generator(t + (0.5 + r) * h);
  const Matrix omega = 0.5 * h * (a1 + a2) + (std::sqrt(3.0) / 12.0) * h * h * (a2 * a1 - a1 * a2);
  Matrix e = expm(omega);
  if (!e.allFinite()) throw IntegrationError("propagator overflow");
  return e;
}

Matrix propagator(const ContinuousCocycle& c, double s, double t) {
  const int d = c.dim();
  if (t == 0.0) return Matrix::Identity(d, d);
  const double len = std::abs(t);
  const auto n = static_cast<long>(std::max(1.0, std::ceil(len / c.step() - 1e-9)));
  const double h = t / static_cast<double>(n);
  Matrix out = Matrix::Identity(d, d);
  for (long i = 0; i < n; ++i) {
    out = magnus_step(c, s + static_cast<double>(i) * h, h) * out;
  }
  if (!out.allFinite()) throw IntegrationError("propagator blew up");
  return out;
}

Vector integrate(const ContinuousCocycle& c, double t0, double t1, const Vector& x0) {
  if (x0.size() != c.dim()) throw DomainError("initial state has wrong dimension");
  return propagator(c, t0, t1 - t0) * x0;
}

PropagatorTable::PropagatorTable(const ContinuousCocycle& c, double t_begin, double t_end)
    : t_begin_(t_begin), h_(c.step()) {
  if (!(t_end > t_begin)) throw ConfigError("propagator table needs t_end > t_begin");
  const auto n = static_cast<std::size_t>(std::ceil((t_end - t_begin) / h_ - 1e-9));
  steps_.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    steps_.push_back(magnus_step(c, t_begin + static_cast<double>(i) * h_, h_));
}

std::size_t PropagatorTable::index_of(double t) const {
  const double pos = (t - t_begin_) / h_;
  const double r = std::round(pos);
  if (std::abs(pos - r) > 1e-6 || r < 0 || r > static_cast<double>(steps_.size()))
    throw WindowError("time not on the propagator table");
  return static_cast<std::size_t>(r);
}

Matrix PropagatorTable::product(std::size_t i0, std::size_t i1) const {
  const auto d = steps_.empty() ? 0 : steps_.front().rows();
  Matrix out = Matrix::Identity(d, d);
  for (std::size_t i = i0; i < i1; ++i) out = steps_[i] * out;
  return out;
}

DiscreteCocycle discretize(const ContinuousCocycle& c) {
  return DiscreteCocycle(c.dim(), [c](std::int64_t n) {
    return propagator(c, static_cast<double>(n), 1.0);
  });
}

OneStepBound one_step_bound(const ContinuousCocycle& c, const TimeGrid& window,
                            int samples_per_unit) {
  if (samples_per_unit <= 0) throw ConfigError("samples_per_unit must be positive");
  OneStepBound out;
  out.samples_per_unit = samples_per_unit;
  const double dt = 1.0 / samples_per_unit;
  // A table at the finer of the two spacings so every (s, t) sample is a node.
  ContinuousCocycle fine(c.dim(), [c](double t) { return c.generator(t); },
                         std::min(c.step(), dt), c.is_autonomous());
  const double h = fine.step();
  const auto per_sample = static_cast<std::size_t>(std::lround(dt / h));
  if (std::abs(static_cast<double>(per_sample) * h - dt) > 1e-12)
    throw ConfigError("integration step must divide 1/samples_per_unit");
  PropagatorTable table(fine, window.t_min(), window.t_max() + 1.0);
  const auto per_unit = static_cast<std::size_t>(samples_per_unit) * per_sample;
  const auto shift_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window.h() / h)));
  const std::size_t last_shift = table.index_of(window.t_max());
  for (std::size_t s = 0; s <= last_shift; s += shift_stride) {
    Matrix acc = Matrix::Identity(c.dim(), c.dim());
    out.value = std::max(out.value, 1.0);
    for (std::size_t j = 0; j < per_unit; ++j) {
      acc = table.step(s + j) * acc;
      if ((j + 1) % per_sample == 0) out.value = std::max(out.value, operator_norm(acc));
    }
    ++out.shifts;
  }
  return out;
}

}  // namespace rds
