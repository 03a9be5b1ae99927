#include "rds/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace rds {

TimeGrid TimeGrid::from_counts(double h, long left, long right) {
  if (!(h > 0) || !std::isfinite(h)) throw ConfigError("time grid: step must be positive");
  if (left < 1 || right < 1)
    throw ConfigError("time grid: window must satisfy t_min < 0 < t_max");
  TimeGrid g;
  g.h_ = h;
  g.left_ = left;
  g.right_ = right;
  return g;
}

TimeGrid TimeGrid::from_bounds(double t_min, double t_max, double h) {
  if (!(h > 0) || !std::isfinite(h)) throw ConfigError("time grid: step must be positive");
  if (!(t_min < 0 && t_max > 0) || !std::isfinite(t_min) || !std::isfinite(t_max))
    throw ConfigError("time grid: window must satisfy t_min < 0 < t_max");
  const long left = static_cast<long>(std::ceil(-t_min / h - 1e-9));
  const long right = static_cast<long>(std::ceil(t_max / h - 1e-9));
  return from_counts(h, std::max(left, 1L), std::max(right, 1L));
}

bool TimeGrid::contains(double t) const {
  const double slack = 1e-9 * h_;
  return t >= t_min() - slack && t <= t_max() + slack;
}

std::size_t TimeGrid::index_of(double t) const {
  const double pos = t / h_ + static_cast<double>(left_);
  const double r = std::round(pos);
  if (std::abs(pos - r) > 1e-6) {
    std::ostringstream msg;
    msg << "time " << t << " is not a grid node (h = " << h_ << ")";
    throw WindowError(msg.str());
  }
  if (r < 0 || r > static_cast<double>(left_ + right_)) {
    std::ostringstream msg;
    msg << "time " << t << " outside window [" << t_min() << ", " << t_max() << "]";
    const double miss = t < t_min() ? t_min() - t : t - t_max();
    throw WindowError(msg.str(), miss);
  }
  return static_cast<std::size_t>(r);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

SamplePath SamplePath::build(Kind kind, double h, long left, long right, std::uint64_t seed,
                             std::shared_ptr<const std::function<double(double)>> fn,
                             std::string label) {
  SamplePath p;
  p.kind_ = kind;
  p.grid_ = TimeGrid::from_counts(h, left, right);
  p.root_left_ = left;
  p.root_right_ = right;
  p.origin_ = 0;
  p.seed_ = seed;
  p.fn_ = std::move(fn);
  p.label_ = std::move(label);
  auto values = std::make_shared<std::vector<double>>(static_cast<std::size_t>(left + right + 1));
  auto& v = *values;
  if (kind == Kind::Wiener) {
    // Outward sequential draws, so a larger window keeps the same prefix.
    const double sd = std::sqrt(h);
    std::mt19937_64 fwd(derive_seed(seed, 1));
    std::mt19937_64 bwd(derive_seed(seed, 2));
    std::normal_distribution<double> nf(0.0, 1.0), nb(0.0, 1.0);
    v[static_cast<std::size_t>(left)] = 0.0;
    for (long a = 1; a <= right; ++a)
      v[static_cast<std::size_t>(left + a)] = v[static_cast<std::size_t>(left + a - 1)] + sd * nf(fwd);
    for (long a = 1; a <= left; ++a)
      v[static_cast<std::size_t>(left - a)] = v[static_cast<std::size_t>(left - a + 1)] + sd * nb(bwd);
  } else if (kind == Kind::Function) {
    const auto& f = *p.fn_;
    const double f0 = f(0.0);
    for (long a = -left; a <= right; ++a)
      v[static_cast<std::size_t>(a + left)] = f(static_cast<double>(a) * h) - f0;
  }
  p.root_ = values;
  return p;
}

SamplePath SamplePath::wiener(const TimeGrid& grid, std::uint64_t seed) {
  return build(Kind::Wiener, grid.h(), grid.left(), grid.right(), seed, nullptr, "wiener");
}

SamplePath SamplePath::zero(const TimeGrid& grid) {
  return from_function(grid, [](double) { return 0.0; }, "zero");
}

SamplePath SamplePath::linear(const TimeGrid& grid, double slope) {
  return from_function(grid, [slope](double t) { return slope * t; }, "linear");
}

SamplePath SamplePath::from_function(const TimeGrid& grid, std::function<double(double)> f,
                                     std::string label) {
  auto fn = std::make_shared<const std::function<double(double)>>(std::move(f));
  return build(Kind::Function, grid.h(), grid.left(), grid.right(), 0, fn, std::move(label));
}

SamplePath SamplePath::from_values(const TimeGrid& grid, std::vector<double> values,
                                   std::uint64_t seed) {
  if (values.size() != grid.size()) throw ConfigError("path values do not match the grid size");
  for (double x : values)
    if (!std::isfinite(x)) throw ConfigError("path values must be finite");
  SamplePath p;
  p.kind_ = Kind::Imported;
  p.grid_ = grid;
  p.root_left_ = grid.left();
  p.root_right_ = grid.right();
  p.seed_ = seed;
  p.label_ = "imported";
  const double w0 = values[static_cast<std::size_t>(grid.left())];
  for (double& x : values) x -= w0;
  p.root_ = std::make_shared<const std::vector<double>>(std::move(values));
  return p;
}

double SamplePath::value(std::size_t i) const {
  const long absolute = static_cast<long>(i) - grid_.left() + origin_;
  return root_value(absolute) - root_value(origin_);
}

double SamplePath::interpolate(double t) const {
  if (!grid_.contains(t)) {
    std::ostringstream msg;
    msg << "time " << t << " outside path window [" << grid_.t_min() << ", " << grid_.t_max() << "]";
    throw WindowError(msg.str(), t < grid_.t_min() ? grid_.t_min() - t : t - grid_.t_max());
  }
  const double pos = t / grid_.h() + static_cast<double>(grid_.left());
  const double last = static_cast<double>(grid_.size() - 1);
  const double cp = std::clamp(pos, 0.0, last);
  std::size_t i = static_cast<std::size_t>(std::floor(cp));
  if (i + 1 >= grid_.size()) i = grid_.size() - 2;
  const double w = cp - static_cast<double>(i);
  return (1 - w) * value(i) + w * value(i + 1);
}

std::vector<double> SamplePath::values() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i);
  return out;
}

double SamplePath::max_abs() const {
  double m = 0;
  for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::abs(value(i)));
  return m;
}

SamplePath SamplePath::extend(long left, long right) const {
  if (!can_extend()) throw WindowError("imported paths cannot be extended");
  const long new_left = std::max(root_left_, left - origin_);
  const long new_right = std::max(root_right_, right + origin_);
  SamplePath p = build(kind_, grid_.h(), new_left, new_right, seed_, fn_, label_);
  p.origin_ = origin_;
  p.grid_ = TimeGrid::from_counts(grid_.h(), new_left + origin_, new_right - origin_);
  p.extended_ = true;
  return p;
}

SamplePath shift(const SamplePath& p, double t, bool allow_extension) {
  const double pos = t / p.grid_.h();
  const double r = std::round(pos);
  if (std::abs(pos - r) > 1e-6) throw WindowError("shift is not a multiple of the grid step");
  const long k = static_cast<long>(r);
  SamplePath out = p;
  out.origin_ = p.origin_ + k;
  long left = out.root_left_ + out.origin_;
  long right = out.root_right_ - out.origin_;
  if (left < 1 || right < 1) {
    if (!allow_extension) {
      std::ostringstream msg;
      msg << "shift by " << t << " leaves the path window";
      const double miss = static_cast<double>(std::max(1 - left, 1 - right)) * p.grid_.h();
      throw WindowError(msg.str(), miss);
    }
    out = p.extend(std::max(p.grid_.left(), 1 - k + p.grid_.left()),
                   std::max(p.grid_.right(), 1 + k + p.grid_.right()));
    out.origin_ = p.origin_ + k;
    left = out.root_left_ + out.origin_;
    right = out.root_right_ - out.origin_;
  }
  out.grid_ = TimeGrid::from_counts(p.grid_.h(), left, right);
  return out;
}

double ou_required_left_length(double max_abs_omega, double tol) {
  // Smallest L with e^{-L} (L + 1 + 2 max|omega|) <= tol.
  double len = std::log((1 + 2 * max_abs_omega) / tol);
  for (int i = 0; i < 100; ++i) {
    const double next = std::log((len + 1 + 2 * max_abs_omega) / tol);
    if (std::abs(next - len) < 1e-12) return next;
    len = next;
  }
  return len;
}

namespace {

void check_tail(const SamplePath& p, double t, double tail_tol) {
  const double need = ou_required_left_length(p.max_abs(), tail_tol);
  const double have = t - p.grid().t_min();
  if (have + 1e-12 < need) {
    std::ostringstream msg;
    msg << "OU integral at t = " << t << " needs " << need << " of left window, has " << have;
    throw WindowError(msg.str(), need - have);
  }
}

}  // namespace

double ou_value(const SamplePath& p, double t, double tail_tol) {
  const std::size_t k = p.grid().index_of(t);
  check_tail(p, t, tail_tol);
  const double h = p.grid().h();
  const double wk = p.value(k);
  double acc = 0;
  for (std::size_t j = 0; j <= k; ++j) {
    const double w = (j == 0 || j == k) ? 0.5 * h : h;
    acc += w * std::exp(static_cast<double>(static_cast<long>(j) - static_cast<long>(k)) * h) *
           (p.value(j) - wk);
  }
  return -acc;
}

OuProcess::OuProcess(const SamplePath& p, double t_begin, double t_end, double tail_tol) {
  if (!(t_end > t_begin)) throw ConfigError("OU window must have t_end > t_begin");
  const TimeGrid& g = p.grid();
  h_ = g.h();
  const double lo = (t_begin - g.t_min()) / h_;
  const double hi = (t_end - g.t_min()) / h_;
  const double last = static_cast<double>(g.size() - 1);
  if (lo < -1e-9 || hi > last + 1e-9) {
    std::ostringstream msg;
    msg << "OU window [" << t_begin << ", " << t_end << "] not inside path window ["
        << g.t_min() << ", " << g.t_max() << "]";
    throw WindowError(msg.str(), std::max(-lo, hi - last) * h_);
  }
  const std::size_t ib = static_cast<std::size_t>(std::floor(lo + 1e-9));
  const std::size_t ie = std::min(static_cast<std::size_t>(std::ceil(hi - 1e-9)), g.size() - 1);
  check_tail(p, g.time(ib), tail_tol);
  t_begin_ = g.time(ib);
  t_end_ = g.time(ie);
  values_.resize(ie - ib + 1);
  const double decay = std::exp(-h_);
  double integral = 0;  // sum of trapezoid weights * e^{s} * omega
  double mass = 0;      // same with omega replaced by 1
  for (std::size_t k = 0; k <= ie; ++k) {
    const double wk = p.value(k);
    if (k > 0) {
      const double wprev = p.value(k - 1);
      integral = decay * (integral + 0.5 * h_ * wprev) + 0.5 * h_ * wk;
      mass = decay * (mass + 0.5 * h_) + 0.5 * h_;
    }
    if (k >= ib) values_[k - ib] = -integral + wk * mass;
  }
}

double OuProcess::operator()(double t) const {
  const double pos = (t - t_begin_) / h_;
  const double last = static_cast<double>(values_.size() - 1);
  if (pos <= 0) return values_.front();
  if (pos >= last) return values_.back();
  const std::size_t i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  return (1 - w) * values_[i] + w * values_[i + 1];
}

double OuProcess::max_abs() const {
  double m = 0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Kappa Kappa::rational() {
  return {[](double t) { return 1.0 / (1.0 + t * t); },
          [](double t) {
            const double d = 1.0 + t * t;
            return -2.0 * t / (d * d);
          }};
}

Kappa Kappa::constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }};
}

NoiseBounds noise_bounds(const SamplePath& p, const Kappa& kappa, const TimeGrid& window,
                         double eta, double tau, double tail_tol) {
  OuProcess z(p, window.t_min(), window.t_max(), tail_tol);
  NoiseBounds b;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double t = window.time(i);
    const double zt = z(t);
    const double k = kappa.value(tau + t);
    const double kd = kappa.derivative(tau + t);
    b.m1 = std::max(b.m1, std::abs(k * zt));
    b.m2 = std::max(b.m2, std::abs((k - kd) * zt));
  }
  b.eta_m1 = std::abs(eta) * b.m1;
  b.eta_m2 = std::abs(eta) * b.m2;
  return b;
}

std::vector<SublinearityEntry> sublinearity_report(const SamplePath& p,
                                                   std::span<const double> checkpoints,
                                                   double tail_tol) {
  std::vector<SublinearityEntry> out;
  out.reserve(checkpoints.size());
  for (double t : checkpoints) {
    if (t == 0.0) throw DomainError("sublinearity checkpoint must be nonzero");
    const double z = ou_value(p, t, tail_tol);
    out.push_back({t, z, std::abs(z) / std::abs(t)});
  }
  return out;
}

void write_path_csv(const SamplePath& p, std::ostream& out) {
  char buf[96];
  out << "# seed=" << p.seed() << " h=";
  std::snprintf(buf, sizeof buf, "%.17g", p.grid().h());
  out << buf << " source=" << p.label() << "\n";
  out << "t,omega\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.grid().time(i), p.value(i));
    out << buf;
  }
}

SamplePath read_path_csv(std::istream& in) {
  std::string line;
  double h = 0;
  std::uint64_t seed = 0;
  std::vector<double> ts, ws;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        if (tok.rfind("seed=", 0) == 0) seed = std::stoull(tok.substr(5));
        if (tok.rfind("h=", 0) == 0) h = std::stod(tok.substr(2));
      }
      continue;
    }
    if (!header) {
      if (line != "t,omega") throw ConfigError("path csv line " + std::to_string(lineno) + ": expected header t,omega");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ConfigError("path csv line " + std::to_string(lineno) + ": expected two columns");
    try {
      ts.push_back(std::stod(line.substr(0, comma)));
      ws.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigError("path csv line " + std::to_string(lineno) + ": malformed number");
    }
  }
  if (ts.size() < 3) throw ConfigError("path csv: too few rows");
  if (!(h > 0)) h = ts[1] - ts[0];
  const long left = std::lround(-ts.front() / h);
  const long right = static_cast<long>(ts.size()) - 1 - left;
  TimeGrid g = TimeGrid::from_counts(h, left, right);
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (std::abs(ts[i] - g.time(i)) > 1e-9 * std::max(1.0, std::abs(ts[i])))
      throw ConfigError("path csv: times are not a uniform grid containing 0");
  return SamplePath::from_values(g, std::move(ws), seed);
}

}  // namespace rds
