#ifndef RDS_NOISE_HPP
#define RDS_NOISE_HPP

#include "rds/core.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rds {

// Uniform grid t_i = (i - left) * h, with 0 always a node.
class TimeGrid {
 public:
  TimeGrid() = default;
  static TimeGrid from_counts(double h, long left, long right);
  // Smallest grid of step h covering [t_min, t_max]; requires t_min < 0 < t_max.
  static TimeGrid from_bounds(double t_min, double t_max, double h);

  double h() const { return h_; }
  long left() const { return left_; }
  long right() const { return right_; }
  std::size_t size() const { return static_cast<std::size_t>(left_ + right_ + 1); }
  double t_min() const { return -static_cast<double>(left_) * h_; }
  double t_max() const { return static_cast<double>(right_) * h_; }
  double time(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(left_)) * h_;
  }
  bool contains(double t) const;
  // Index of the node at t; throws WindowError if t is outside or off-grid.
  std::size_t index_of(double t) const;

 private:
  double h_ = 1.0 / 64.0;
  long left_ = 1;
  long right_ = 1;
};

std::uint64_t splitmix64(std::uint64_t x);
// Counter-based child seed: the same (seed, index) always gives the same stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Two-sided path with omega(0) = 0 on a grid. Shifts reuse the underlying
// samples, so shift(shift(p, s), t) and shift(p, s + t) agree exactly.
class SamplePath {
 public:
  static SamplePath wiener(const TimeGrid& grid, std::uint64_t seed);
  static SamplePath zero(const TimeGrid& grid);
  static SamplePath linear(const TimeGrid& grid, double slope = 1.0);
  // omega(t) = f(t) - f(0).
  static SamplePath from_function(const TimeGrid& grid, std::function<double(double)> f,
                                  std::string label = "function");
  static SamplePath from_values(const TimeGrid& grid, std::vector<double> values,
                                std::uint64_t seed = 0);

  const TimeGrid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  double value(std::size_t i) const;
  double at(double t) const { return value(grid_.index_of(t)); }
  // Linear interpolation between nodes; throws WindowError outside.
  double interpolate(double t) const;
  std::vector<double> values() const;
  double max_abs() const;

  std::uint64_t seed() const { return seed_; }
  bool is_wiener() const { return kind_ == Kind::Wiener; }
  bool can_extend() const { return kind_ != Kind::Imported; }
  bool extended() const { return extended_; }
  // Total shift applied relative to the originally generated path.
  double shift_origin() const { return static_cast<double>(origin_) * grid_.h(); }
  const std::string& label() const { return label_; }

  // Same path on a larger window (only for generated paths).
  SamplePath extend(long left, long right) const;

  friend SamplePath shift(const SamplePath& p, double t, bool allow_extension);

 private:
  enum class Kind { Wiener, Function, Imported };
  Kind kind_ = Kind::Function;
  TimeGrid grid_;
  // Root samples on absolute steps [-root_left, root_right].
  std::shared_ptr<const std::vector<double>> root_;
  long root_left_ = 0;
  long root_right_ = 0;
  long origin_ = 0;  // absolute step sitting at relative time 0
  std::uint64_t seed_ = 0;
  std::shared_ptr<const std::function<double(double)>> fn_;
  std::string label_;
  bool extended_ = false;

  double root_value(long absolute) const {
    return (*root_)[static_cast<std::size_t>(absolute + root_left_)];
  }
  static SamplePath build(Kind kind, double h, long left, long right, std::uint64_t seed,
                          std::shared_ptr<const std::function<double(double)>> fn,
                          std::string label);
};

// (theta_t omega)(s) = omega(t + s) - omega(t). Requires t on the grid.
SamplePath shift(const SamplePath& p, double t, bool allow_extension = false);

// Left window length needed so the truncated OU integral at time t meets tol.
double ou_required_left_length(double max_abs_omega, double tol);

// z*(theta_t omega) = -int_{-inf}^0 e^s (omega(t+s) - omega(t)) ds, trapezoid
// on the grid over the available left half line.
double ou_value(const SamplePath& p, double t, double tail_tol = 1e-10);

// z* along a grid window by the exact exponential recursion; agrees with
// ou_value at nodes up to rounding.
class OuProcess {
 public:
  OuProcess(const SamplePath& p, double t_begin, double t_end, double tail_tol = 1e-10);
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  double h() const { return h_; }
  std::size_t size() const { return values_.size(); }
  double node(std::size_t i) const { return values_[i]; }
  double time(std::size_t i) const { return t_begin_ + static_cast<double>(i) * h_; }
  // Linear interpolation; clamps to the end values outside the window.
  double operator()(double t) const;
  double max_abs() const;

 private:
  double t_begin_ = 0;
  double t_end_ = 0;
  double h_ = 0;
  std::vector<double> values_;
};

// Damping profile kappa with its derivative.
struct Kappa {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  static Kappa rational();  // 1 / (1 + t^2)
  static Kappa constant(double c);
};

struct NoiseBounds {
  double m1 = 0;  // sup |kappa z*|
  double m2 = 0;  // sup |(kappa - kappa') z*|
  double eta_m1 = 0;
  double eta_m2 = 0;
};

NoiseBounds noise_bounds(const SamplePath& p, const Kappa& kappa, const TimeGrid& window,
                         double eta, double tau = 0.0, double tail_tol = 1e-10);

struct SublinearityEntry {
  double t;
  double z;
  double ratio;
};
std::vector<SublinearityEntry> sublinearity_report(const SamplePath& p,
                                                   std::span<const double> checkpoints,
                                                   double tail_tol = 1e-10);

void write_path_csv(const SamplePath& p, std::ostream& out);
SamplePath read_path_csv(std::istream& in);

}  // namespace rds

#endif
