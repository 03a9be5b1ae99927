#include "rds/greens.hpp"

#include "rds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rds {

Sequence Sequence::zeros(std::int64_t first, std::int64_t last, int dim) {
  Sequence s;
  s.first = first;
  s.values.assign(static_cast<std::size_t>(last - first + 1), Vector::Zero(dim));
  return s;
}

double Sequence::sup_norm() const {
  double m = 0;
  for (const auto& v : values) m = std::max(m, v.norm());
  return m;
}

long truncation_length(double alpha, double bound, double tol) {
  if (!(alpha > 0) || !(tol > 0)) throw DomainError("truncation_length needs alpha > 0 and tol > 0");
  if (bound <= 0) return 0;
  const double q = std::exp(-alpha);
  const double n = std::log(bound / ((1 - q) * tol)) / alpha;
  return std::max(0L, static_cast<long>(std::ceil(n - 1e-12)));
}

AdmissibilityOperator::AdmissibilityOperator(const DiscreteCocycle& base, const DichotomyCertificate& cert,
                                             std::function<Matrix(std::int64_t)> perturbation,
                                             std::int64_t first, std::int64_t last)
    : first_(first), last_(last), dim_(base.dim()), k_(cert.bound), alpha_(cert.exponent) {
  if (last <= first) throw ConfigError("admissibility window needs last > first");
  if (cert.dim() != dim_) throw DomainError("certificate dimension mismatch");
  if (!(alpha_ > 0)) throw DomainError("dichotomy exponent must be positive");
  const auto n = static_cast<std::size_t>(last - first + 1);
  ps_.resize(n);
  pu_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ps_[i] = cert.stable_at(static_cast<double>(first + static_cast<std::int64_t>(i)));
    pu_[i] = Matrix::Identity(dim_, dim_) - ps_[i];
  }
  a_.resize(n - 1);
  b_.resize(n - 1);
  back_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto k = first + static_cast<std::int64_t>(i);
    a_[i] = base.step(k);
    b_[i] = perturbation ? perturbation(k) : Matrix::Zero(dim_, dim_);
    if (b_[i].rows() != dim_ || b_[i].cols() != dim_ || !b_[i].allFinite())
      throw DomainError("perturbation has wrong shape or non-finite entries");
    sup_b_ = std::max(sup_b_, operator_norm(b_[i]));
    back_[i] = restricted_inverse(a_[i], pu_[i], pu_[i + 1]).inverse;
  }
  const double q = std::exp(-alpha_);
  rho_ = sup_b_ * k_ * (1 + q) / (1 - q);
}

AdmissibilityOperator::Block AdmissibilityOperator::apply_block(const Block& f, const Block& x) const {
  const std::size_t n = ps_.size();
  const auto cols = f.front().cols();
  Block y(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) y[k] = b_[k] * x[k] + f[k];
  Block out(n);
  Matrix s = Matrix::Zero(dim_, cols);
  out[0] = s;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    s = ps_[k + 1] * (a_[k] * s + y[k]);
    out[k + 1] = s;
  }
  Matrix u = Matrix::Zero(dim_, cols);
  for (std::size_t k = n - 1; k-- > 0;) {
    u = back_[k] * (u - pu_[k + 1] * y[k]);
    out[k] += u;
  }
  return out;
}

void AdmissibilityOperator::require_contraction() const {
  if (rho_ > contraction_limit) {
    std::ostringstream msg;
    const double q = std::exp(-alpha_);
    msg << "perturbation too large: contraction factor " << rho_ << " exceeds " << contraction_limit
        << " (need K sup||B|| < " << (1 - q) / (1 + q) << ")";
    throw ContractionError(msg.str(), rho_);
  }
}

AdmissibilityOperator::Block AdmissibilityOperator::solve_block(const Block& f, double tol, int& iterations,
                                                                double& residual, const Block* guess) const {
  require_contraction();
  const std::size_t n = ps_.size();
  Block x = guess ? *guess : Block(n, Matrix::Zero(dim_, f.front().cols()));
  Block first = apply_block(f, x);
  double first_step = 0;
  for (std::size_t i = 0; i < n; ++i) first_step = std::max(first_step, (first[i] - x[i]).colwise().norm().maxCoeff());
  x = std::move(first);
  int limit = 10;
  if (rho_ > 0 && first_step > 0)
    limit += static_cast<int>(std::ceil(std::log(tol * (1 - rho_) / first_step) / std::log(rho_)));
  limit = std::max(limit, 10);
  iterations = 1;
  residual = first_step;
  while (residual > tol) {
    if (iterations > limit) {
      std::ostringstream msg;
      msg << "fixed-point iteration did not converge: residual " << residual << " after " << iterations;
      throw ContractionError(msg.str(), rho_);
    }
    Block next = apply_block(f, x);
    residual = 0;
    for (std::size_t i = 0; i < n; ++i)
      residual = std::max(residual, (next[i] - x[i]).colwise().norm().maxCoeff());
    if (!std::isfinite(residual)) throw ContractionError("fixed-point iteration diverged", rho_);
    x = std::move(next);
    ++iterations;
  }
  return x;
}

Sequence AdmissibilityOperator::apply(const Sequence& f, const Sequence& x) const {
  const auto n = ps_.size();
  Block fb(n - 1), xb(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = first_ + static_cast<std::int64_t>(i);
    xb[i] = x.contains(t) ? Matrix(x.at(t)) : Matrix::Zero(dim_, 1);
    if (i + 1 < n) fb[i] = f.contains(t) ? Matrix(f.at(t)) : Matrix::Zero(dim_, 1);
  }
  Block y = apply_block(fb, xb);
  Sequence out;
  out.first = first_;
  for (auto& m : y) out.values.push_back(m.col(0));
  return out;
}

BoundedSolution AdmissibilityOperator::solve(const Sequence& f, double tol) const {
  return solve(f, Sequence::zeros(first_, last_, dim_), tol);
}

BoundedSolution AdmissibilityOperator::solve(const Sequence& f, const Sequence& guess, double tol) const {
  const auto n = ps_.size();
  Block fb(n - 1);
  double fsup = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto t = first_ + static_cast<std::int64_t>(i);
    fb[i] = f.contains(t) ? Matrix(f.at(t)) : Matrix::Zero(dim_, 1);
    fsup = std::max(fsup, fb[i].norm());
  }
  Block x0(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = first_ + static_cast<std::int64_t>(i);
    x0[i] = guess.contains(t) ? Matrix(guess.at(t)) : Matrix::Zero(dim_, 1);
  }
  BoundedSolution out;
  Block x = solve_block(fb, tol, out.iterations, out.residual, &x0);
  out.x.first = first_;
  for (auto& m : x) out.x.values.push_back(m.col(0));
  out.contraction = rho_;
  const double q = std::exp(-alpha_);
  out.a_priori_bound = k_ * fsup * (1 + q) / ((1 - q) * (1 - rho_));
  out.edge_band = fsup > 0 ? truncation_length(alpha_, k_ * fsup, tol) : 0;
  out.within_a_priori_bound = out.x.sup_norm() <= out.a_priori_bound * (1 + 1e-9) + tol;
  return out;
}

std::pair<Matrix, Matrix> AdmissibilityOperator::impulse_projection(std::int64_t m, double tol) const {
  if (m - 1 < first_ || m > last_) throw WindowError("impulse node outside the window");
  const auto n = ps_.size();
  Block fb(n - 1, Matrix::Zero(dim_, dim_));
  fb[static_cast<std::size_t>(m - 1 - first_)] = Matrix::Identity(dim_, dim_);
  int iterations = 0;
  double residual = 0;
  Block x = solve_block(fb, tol, iterations, residual);
  Matrix ps = x[static_cast<std::size_t>(m - first_)];
  Matrix pu = Matrix::Identity(dim_, dim_) - ps;
  return {ps, pu};
}

Sequence gamma_apply(const AdmissibilityOperator& op, const Sequence& f, const Sequence& x) {
  return op.apply(f, x);
}

BoundedSolution bounded_solution(const AdmissibilityOperator& op, const Sequence& f, double tol) {
  return op.solve(f, tol);
}

std::pair<Matrix, Matrix> impulse_response_projection(const AdmissibilityOperator& op, std::int64_t m,
                                                      double tol) {
  return op.impulse_projection(m, tol);
}

}  // namespace rds
