#ifndef RDS_LINALG_HPP
#define RDS_LINALG_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace rds {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Spectral norm (largest singular value).
template <typename Derived>
typename Derived::RealScalar operator_norm(const Eigen::MatrixBase<Derived>& m) {
  using Real = typename Derived::RealScalar;
  if (m.size() == 0) return Real(0);
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  DenseMatrix<typename Derived::Scalar> a = m;
  Eigen::JacobiSVD<DenseMatrix<typename Derived::Scalar>> svd(a);
  return svd.singularValues()(0);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Derived>
DenseMatrix<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 1) {
    DenseMatrix<Scalar> r(1, 1);
    r(0, 0) = std::exp(m(0, 0));
    return r;
  }
  DenseMatrix<Scalar> a = m;
  return a.exp();
}

// Orthonormal basis of the column space, rank decided relative to the largest
// singular value.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> range_basis(const Eigen::MatrixBase<Derived>& p,
                                                  typename Derived::RealScalar rel_tol = 1e-8) {
  using Scalar = typename Derived::Scalar;
  DenseMatrix<Scalar> a = p;
  Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(a, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  const auto top = sv.size() > 0 ? sv(0) : 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * std::max<typename Derived::RealScalar>(top, 1)) ++rank;
  return svd.matrixU().leftCols(rank);
}

template <typename Real>
struct RestrictedInverse {
  DenseMatrix<Real> inverse;  // maps range(target) back into range(source)
  Real condition = 0;         // of step restricted to the source range
  Real smallest_singular = 0;
  Eigen::Index rank = 0;
};

// Inverse of `step` restricted to range(source) -> range(target):
// R = U (step U)^+ target, with U an orthonormal basis of range(source).
template <typename D1, typename D2, typename D3>
RestrictedInverse<typename D1::Scalar> restricted_inverse(const Eigen::MatrixBase<D1>& step,
                                                          const Eigen::MatrixBase<D2>& source,
                                                          const Eigen::MatrixBase<D3>& target,
                                                          typename D1::RealScalar rank_tol = 1e-8) {
  using Scalar = typename D1::Scalar;
  RestrictedInverse<Scalar> out;
  const Eigen::Index d = step.rows();
  DenseMatrix<Scalar> u = range_basis(source, rank_tol);
  out.rank = u.cols();
  if (out.rank == 0) {
    out.inverse = DenseMatrix<Scalar>::Zero(d, d);
    out.condition = 1;
    out.smallest_singular = std::numeric_limits<Scalar>::infinity();
    return out;
  }
  DenseMatrix<Scalar> su = step * u;
  Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(su, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  out.smallest_singular = sv(sv.size() - 1);
  out.condition = out.smallest_singular > 0 ? sv(0) / out.smallest_singular
                                            : std::numeric_limits<Scalar>::infinity();
  DenseMatrix<Scalar> pinv = svd.matrixV() *
                             sv.cwiseInverse().asDiagonal() *
                             svd.matrixU().adjoint();
  out.inverse = u * pinv * target;
  return out;
}

template <typename Real>
struct OrderedSchur {
  DenseMatrix<std::complex<Real>> q;
  DenseMatrix<std::complex<Real>> t;
  Eigen::Index selected = 0;  // leading block size
};

// Complex Schur form with the eigenvalues satisfying `select` moved to the
// leading block by adjacent Givens swaps.
template <typename Derived, typename Pred>
OrderedSchur<typename Derived::RealScalar> ordered_schur(const Eigen::MatrixBase<Derived>& a,
                                                         Pred select) {
  using Real = typename Derived::RealScalar;
  using C = std::complex<Real>;
  DenseMatrix<C> ac = a.template cast<C>();
  Eigen::ComplexSchur<DenseMatrix<C>> schur(ac);
  OrderedSchur<Real> out;
  out.q = schur.matrixU();
  out.t = schur.matrixT();
  const Eigen::Index n = a.rows();
  auto& t = out.t;
  auto& q = out.q;

  auto swap_down = [&](Eigen::Index k) {
    const C x0 = t(k, k + 1);
    const C x1 = t(k + 1, k + 1) - t(k, k);
    const Real r = std::sqrt(std::norm(x0) + std::norm(x1));
    if (r == Real(0)) return;
    Eigen::Matrix<C, 2, 2> g;
    g(0, 0) = x0 / r;
    g(1, 0) = x1 / r;
    g(0, 1) = -std::conj(x1) / r;
    g(1, 1) = std::conj(x0) / r;
    t.middleRows(k, 2) = (g.adjoint() * t.middleRows(k, 2)).eval();
    t.middleCols(k, 2) = (t.middleCols(k, 2) * g).eval();
    q.middleCols(k, 2) = (q.middleCols(k, 2) * g).eval();
    t(k + 1, k) = C(0);
  };

  Eigen::Index placed = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!select(t(i, i))) continue;
    for (Eigen::Index k = i; k > placed; --k) swap_down(k - 1);
    ++placed;
  }
  out.selected = placed;
  return out;
}

// Riesz projector onto the invariant subspace of the selected eigenvalues,
// along the complementary invariant subspace.
template <typename Derived, typename Pred>
DenseMatrix<typename Derived::RealScalar> riesz_projector(const Eigen::MatrixBase<Derived>& a,
                                                          Pred select) {
  using Real = typename Derived::RealScalar;
  using C = std::complex<Real>;
  const Eigen::Index n = a.rows();
  OrderedSchur<Real> s = ordered_schur(a, select);
  const Eigen::Index k = s.selected;
  if (k == 0) return DenseMatrix<Real>::Zero(n, n);
  if (k == n) return DenseMatrix<Real>::Identity(n, n);

  // T11 Y - Y T22 = -T12, column by column against upper triangular T22.
  const DenseMatrix<C> t11 = s.t.topLeftCorner(k, k);
  const DenseMatrix<C> t12 = s.t.topRightCorner(k, n - k);
  const DenseMatrix<C> t22 = s.t.bottomRightCorner(n - k, n - k);
  DenseMatrix<C> y(k, n - k);
  for (Eigen::Index j = 0; j < n - k; ++j) {
    Eigen::Matrix<C, Eigen::Dynamic, 1> rhs = -t12.col(j);
    for (Eigen::Index i = 0; i < j; ++i) rhs += y.col(i) * t22(i, j);
    DenseMatrix<C> shifted = t11;
    shifted.diagonal().array() -= t22(j, j);
    y.col(j) = shifted.template triangularView<Eigen::Upper>().solve(rhs);
  }
  DenseMatrix<C> pt = DenseMatrix<C>::Zero(n, n);
  pt.topLeftCorner(k, k).setIdentity();
  pt.topRightCorner(k, n - k) = -y;
  DenseMatrix<C> p = s.q * pt * s.q.adjoint();
  return p.real();
}

}  // namespace rds

#endif
