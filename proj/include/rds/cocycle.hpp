#ifndef RDS_COCYCLE_HPP
#define RDS_COCYCLE_HPP

#include "rds/core.hpp"
#include "rds/noise.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace rds {

// Discrete linear cocycle: phi(1, Theta^n w) = step(n).
class DiscreteCocycle {
 public:
  DiscreteCocycle() = default;
  DiscreteCocycle(int dim, std::function<Matrix(std::int64_t)> step);
  static DiscreteCocycle constant(const Matrix& a);
  // step(n) = mats[n mod p]
  static DiscreteCocycle periodic(std::vector<Matrix> mats);

  int dim() const { return dim_; }
  Matrix step(std::int64_t n) const;
  DiscreteCocycle shifted(std::int64_t k) const;

 private:
  int dim_ = 0;
  std::function<Matrix(std::int64_t)> step_;
};

// phi(n, Theta^start w) = step(start+n-1) ... step(start) for n >= 0, inverse for n < 0.
Matrix compose_discrete(const DiscreteCocycle& c, std::int64_t n, std::int64_t start = 0);

// Continuous cocycle generated by x' = A(Theta_t w) x.
class ContinuousCocycle {
 public:
  ContinuousCocycle() = default;
  ContinuousCocycle(int dim, std::function<Matrix(double)> generator, double step = 1.0 / 64.0,
                    bool autonomous = false);
  static ContinuousCocycle autonomous(const Matrix& a, double step = 1.0 / 64.0);

  int dim() const { return dim_; }
  double step() const { return step_; }
  bool is_autonomous() const { return autonomous_; }
  Matrix generator(double t) const;
  ContinuousCocycle shifted(double s) const;

 private:
  int dim_ = 0;
  std::function<Matrix(double)> gen_;
  double step_ = 1.0 / 64.0;
  bool autonomous_ = false;
};

// One fourth-order Magnus step for x' = A(t) x over [t, t + h].
Matrix magnus_step(const ContinuousCocycle& c, double t, double h);

// phi(t, Theta_s w): the propagator from time s to s + t (t may be negative).
Matrix propagator(const ContinuousCocycle& c, double s, double t);
Vector integrate(const ContinuousCocycle& c, double t0, double t1, const Vector& x0);

// Step matrices on the aligned grid t_i = t_begin + i h; products over ranges.
class PropagatorTable {
 public:
  PropagatorTable(const ContinuousCocycle& c, double t_begin, double t_end);
  double t_begin() const { return t_begin_; }
  double h() const { return h_; }
  std::size_t steps() const { return steps_.size(); }
  std::size_t index_of(double t) const;
  const Matrix& step(std::size_t i) const { return steps_[i]; }
  // Propagator from node i0 to node i1 >= i0.
  Matrix product(std::size_t i0, std::size_t i1) const;

 private:
  double t_begin_;
  double h_;
  std::vector<Matrix> steps_;
};

// Time-one map: step(n) = phi(1, Theta_n w). The generator must be defined
// wherever the result is queried.
DiscreteCocycle discretize(const ContinuousCocycle& c);

// Sampled sup of ||phi(t, Theta_s w)|| over shifts on the window nodes and t in [0, 1].
// This is a lower estimate of the true supremum.
struct OneStepBound {
  double value = 0;
  std::size_t shifts = 0;
  int samples_per_unit = 0;
};
OneStepBound one_step_bound(const ContinuousCocycle& c, const TimeGrid& window,
                            int samples_per_unit = 64);

// Two-parameter view Phi(t, s) = phi(t - s, Theta_s w).
class EvolutionProcess {
 public:
  explicit EvolutionProcess(ContinuousCocycle c) : c_(std::move(c)) {}
  Matrix operator()(double t, double s) const { return propagator(c_, s, t - s); }

 private:
  ContinuousCocycle c_;
};

}  // namespace rds

#endif
