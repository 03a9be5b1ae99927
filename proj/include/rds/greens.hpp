#ifndef RDS_GREENS_HPP
#define RDS_GREENS_HPP

#include "rds/cocycle.hpp"
#include "rds/core.hpp"
#include "rds/dichotomy.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace rds {

// Vector sequence on consecutive integers first, first + 1, ...
struct Sequence {
  std::int64_t first = 0;
  std::vector<Vector> values;

  static Sequence zeros(std::int64_t first, std::int64_t last, int dim);
  std::int64_t last() const { return first + static_cast<std::int64_t>(values.size()) - 1; }
  bool contains(std::int64_t n) const { return n >= first && n <= last(); }
  const Vector& at(std::int64_t n) const { return values[static_cast<std::size_t>(n - first)]; }
  Vector& at(std::int64_t n) { return values[static_cast<std::size_t>(n - first)]; }
  double sup_norm() const;
};

// Smallest N with bound * e^{-alpha N} / (1 - e^{-alpha}) <= tol.
long truncation_length(double alpha, double bound, double tol);

struct BoundedSolution {
  Sequence x;
  double residual = 0;
  int iterations = 0;
  double contraction = 0;
  long edge_band = 0;  // nodes near each edge affected by truncation
  double a_priori_bound = 0;
  bool within_a_priori_bound = true;
};

// (Gamma_f x)(n) = sum_k G(n, k + 1) (B_k x_k + f_k) on a finite window,
// with G built from a dichotomy of the base cocycle.
class AdmissibilityOperator {
 public:
  AdmissibilityOperator(const DiscreteCocycle& base, const DichotomyCertificate& cert,
                        std::function<Matrix(std::int64_t)> perturbation, std::int64_t first,
                        std::int64_t last);

  std::int64_t first() const { return first_; }
  std::int64_t last() const { return last_; }
  int dim() const { return dim_; }
  double sup_perturbation() const { return sup_b_; }
  // sup ||B|| K (1 + e^{-alpha}) / (1 - e^{-alpha})
  double contraction_factor() const { return rho_; }
  double bound() const { return k_; }
  double exponent() const { return alpha_; }

  Sequence apply(const Sequence& f, const Sequence& x) const;
  BoundedSolution solve(const Sequence& f, double tol = 1e-12) const;
  // Picard iteration started from `guess` instead of zero.
  BoundedSolution solve(const Sequence& f, const Sequence& guess, double tol) const;
  // Impulse z at f_{m-1}; x_m = P z defines the stable projection at m.
  std::pair<Matrix, Matrix> impulse_projection(std::int64_t m, double tol = 1e-12) const;

  static constexpr double contraction_limit = 0.9;

 private:
  using Block = std::vector<Matrix>;
  Block apply_block(const Block& f, const Block& x) const;
  Block solve_block(const Block& f, double tol, int& iterations, double& residual,
                    const Block* guess = nullptr) const;
  void require_contraction() const;

  std::int64_t first_, last_;
  int dim_;
  double k_, alpha_, rho_ = 0, sup_b_ = 0;
  std::vector<Matrix> a_, b_, ps_, pu_, back_;
};

Sequence gamma_apply(const AdmissibilityOperator& op, const Sequence& f, const Sequence& x);
BoundedSolution bounded_solution(const AdmissibilityOperator& op, const Sequence& f, double tol = 1e-12);
std::pair<Matrix, Matrix> impulse_response_projection(const AdmissibilityOperator& op, std::int64_t m,
                                                      double tol = 1e-12);

}  // namespace rds

#endif
