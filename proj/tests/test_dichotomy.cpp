#include "rds/dichotomy.hpp"
#include "rds/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

using namespace rds;

namespace {

using C = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

// Riesz projector by the trapezoid rule on the circle |z - c| = r.
Matrix contour_projector(const Matrix& a, double c, double r, int nodes = 400) {
  const auto n = a.rows();
  CMatrix acc = CMatrix::Zero(n, n);
  const CMatrix ac = a.cast<C>();
  for (int k = 0; k < nodes; ++k) {
    const double th = 2 * M_PI * k / nodes;
    const C e = std::polar(1.0, th);
    const C z = c + r * e;
    const C dz = C(0, 1) * r * e * (2 * M_PI / nodes);
    CMatrix res = (z * CMatrix::Identity(n, n) - ac).inverse();
    acc += res * dz;
  }
  acc /= C(0, 2 * M_PI);
  return acc.real();
}

Matrix random_invertible(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix s(d, d);
  for (;;) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s(i, j) = u(rng);
    s += Matrix::Identity(d, d);
    Eigen::JacobiSVD<Matrix> svd(s);
    if (svd.singularValues()(d - 1) > 0.2) return s;
  }
}

Matrix saddle() {
  Matrix a(2, 2);
  a << -1, 0, 0, 1;
  return a;
}

}  // namespace

TEST(SpectralProjection, DiagonalSaddle) {
  SpectralSplit s = spectral_projection(saddle());
  Matrix expect(2, 2);
  expect << 1, 0, 0, 0;
  EXPECT_LT(operator_norm(Matrix(s.stable - expect)), 1e-14);
  EXPECT_EQ(s.stable_dim, 1);
  EXPECT_DOUBLE_EQ(s.gap, 1.0);
}

TEST(SpectralProjection, AgreesWithContourIntegral) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 12; ++trial) {
    const int d = 2 + trial % 4;
    // unstable eigenvalues inside |z - 3| < 2, stable ones with Re <= -0.3
    Eigen::VectorXd lam(d);
    for (int i = 0; i < d; ++i) lam(i) = (i % 2 == 0) ? 1.5 + 2.5 * u(rng) : -0.3 - 2 * u(rng);
    const Matrix s = random_invertible(rng, d);
    const Matrix a = s * lam.asDiagonal() * s.inverse();
    const Matrix ref = contour_projector(a, 3.0, 2.5);
    SpectralSplit sp = spectral_projection(a);
    EXPECT_LT(operator_norm(Matrix(sp.unstable - ref)), 1e-9 * operator_norm(ref)) << trial;
  }
}

TEST(SpectralProjection, ComplexPairsAndNonNormal) {
  Matrix a(4, 4);
  a << -0.5, 5, 0, 3,
       -5, -0.5, 1, 0,
       0, 0, 0.7, 2,
       0, 0, -2, 0.7;
  const Matrix ref = contour_projector(a, 4.0, 3.95, 4000);
  SpectralSplit sp = spectral_projection(a);
  EXPECT_LT(operator_norm(Matrix(sp.unstable - ref)), 1e-9);
  EXPECT_LT(operator_norm(Matrix(sp.stable * sp.stable - sp.stable)), 1e-12);
  EXPECT_LT(operator_norm(Matrix(sp.stable * a - a * sp.stable)), 1e-12);
  EXPECT_EQ(sp.stable_dim, 2);
}

TEST(SpectralProjection, OrthogonalConjugationCovariance) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 8; ++trial) {
    const int d = 3 + trial % 3;
    Matrix m = random_invertible(rng, d);
    Eigen::HouseholderQR<Matrix> qr(m);
    const Matrix q = qr.householderQ();
    Matrix a = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) a(i, i) = (i % 2 ? 1.0 : -1.0) * (0.5 + i);
    a(0, d - 1) = 2.0;
    a += 0.1 * random_invertible(rng, d);
    SpectralSplit s1 = spectral_projection(a);
    SpectralSplit s2 = spectral_projection(Matrix(q * a * q.transpose()));
    EXPECT_LT(operator_norm(Matrix(q * s1.stable * q.transpose() - s2.stable)), 1e-10);
  }
}

TEST(SpectralProjection, RejectsCentreDirections) {
  Matrix a(2, 2);
  a << 0, 1, 0, -1;
  EXPECT_THROW(spectral_projection(a), NonHyperbolicError);
  Matrix b(2, 2);
  b << 0, 1, -1, 0;  // pure rotation
  EXPECT_THROW(spectral_projection(b), NonHyperbolicError);
  Matrix c = Matrix::Identity(2, 2);  // modulus one for maps
  EXPECT_THROW(spectral_projection_discrete(c), NonHyperbolicError);
}

TEST(AutonomousCertificate, SaddleConstants) {
  DichotomyCertificate c = autonomous_certificate(saddle());
  EXPECT_DOUBLE_EQ(c.bound, 1.0);
  EXPECT_NEAR(c.exponent, 0.9, 1e-15);
  SampledEvolution e = sample_evolution(ContinuousCocycle::autonomous(saddle()), -5, 5, 0.125);
  EXPECT_TRUE(verify_dichotomy(e, c).passed());
}

TEST(AutonomousCertificate, NonNormalNeedsLargerBound) {
  Matrix a(2, 2);
  a << -1, 20, 0, -2;
  DichotomyCertificate c = autonomous_certificate(a);
  EXPECT_GT(c.bound, 5.0);
  SampledEvolution e = sample_evolution(ContinuousCocycle::autonomous(a), 0, 12, 1.0 / 16.0);
  VerificationReport r = verify_dichotomy(e, c);
  EXPECT_TRUE(r.passed());
  // scan value is sharp: 20 % less fails
  DichotomyCertificate tight = c;
  tight.bound *= 0.8;
  EXPECT_FALSE(verify_dichotomy(e, tight).forward_decay.pass);
}

TEST(AutonomousCertificate, DiscreteDiagonal) {
  Matrix a(2, 2);
  a << 0.5, 0, 0, 2;
  DichotomyCertificate c = autonomous_certificate_discrete(a);
  EXPECT_DOUBLE_EQ(c.bound, 1.0);
  EXPECT_NEAR(c.exponent, std::log(2.0), 1e-15);
  VerificationReport r = verify_dichotomy(sample_evolution(DiscreteCocycle::constant(a), -20, 20), c);
  EXPECT_TRUE(r.passed());
}

TEST(Verify, FalsifiesWrongProjections) {
  SampledEvolution e = sample_evolution(ContinuousCocycle::autonomous(saddle()), -4, 4, 0.25);
  DichotomyCertificate good = autonomous_certificate(saddle());

  DichotomyCertificate all_stable = good;
  all_stable.stable = {Matrix::Identity(2, 2)};
  EXPECT_FALSE(verify_dichotomy(e, all_stable).forward_decay.pass);

  DichotomyCertificate all_unstable = good;
  all_unstable.stable = {Matrix::Zero(2, 2)};
  EXPECT_FALSE(verify_dichotomy(e, all_unstable).backward_decay.pass);

  DichotomyCertificate fast = good;
  fast.exponent *= 2;
  VerificationReport r = verify_dichotomy(e, fast);
  EXPECT_FALSE(r.forward_decay.pass && r.backward_decay.pass);

  DichotomyCertificate skew = good;
  Matrix p(2, 2);
  p << 1, 1, 0, 0;  // a projection, but not invariant
  skew.stable = {p};
  EXPECT_FALSE(verify_dichotomy(e, skew).commutation.pass);
}

TEST(Verify, FlagsIsomorphismViolation) {
  Matrix a(2, 2);
  a << 0.5, 0, 0, 0;  // kills the would-be unstable direction
  DichotomyCertificate c;
  Matrix p(2, 2);
  p << 1, 0, 0, 0;
  c.stable = {p};
  c.bound = 1;
  c.exponent = std::log(2.0);
  c.discrete = true;
  VerificationReport r = verify_dichotomy(sample_evolution(DiscreteCocycle::constant(a), 0, 6), c);
  EXPECT_TRUE(r.isomorphism_violation);
  EXPECT_FALSE(r.passed());
}

TEST(Verify, SampledCertificateMustAlign) {
  DichotomyCertificate c;
  c.stable = {Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  c.origin = 0;
  c.spacing = 1;
  c.bound = 1;
  c.exponent = 0.1;
  SampledEvolution e = sample_evolution(DiscreteCocycle::constant(Matrix::Constant(1, 1, 0.5)), 0, 4);
  EXPECT_THROW(verify_dichotomy(e, c), WindowError);
}

TEST(Green, ScalarStableAndUnstable) {
  DichotomyCertificate st = autonomous_certificate_discrete(Matrix::Constant(1, 1, 0.5));
  GreenKernel gs(sample_evolution(DiscreteCocycle::constant(Matrix::Constant(1, 1, 0.5)), -10, 10), st);
  for (int n = -5; n <= 5; ++n) {
    const double expect = n >= 0 ? std::pow(0.5, n) : 0.0;
    EXPECT_EQ(green_eval(gs, n, 0)(0, 0), expect) << n;
  }
  DichotomyCertificate un = autonomous_certificate_discrete(Matrix::Constant(1, 1, 2.0));
  GreenKernel gu(sample_evolution(DiscreteCocycle::constant(Matrix::Constant(1, 1, 2.0)), -10, 10), un);
  for (int n = -5; n <= 5; ++n) {
    const double expect = n >= 0 ? 0.0 : -std::pow(2.0, n);
    EXPECT_EQ(green_eval(gu, n, 0)(0, 0), expect) << n;
  }
}

TEST(Green, JumpAtCoincidence) {
  SampledEvolution e = sample_evolution(ContinuousCocycle::autonomous(saddle()), -3, 3, 0.25);
  GreenKernel g(e, autonomous_certificate(saddle()));
  for (double s : {-2.0, 0.0, 1.5}) {
    const Matrix jump = g(s, s) - g.backward_limit(s);
    EXPECT_LT(operator_norm(Matrix(jump - Matrix::Identity(2, 2))), 1e-14);
  }
}

TEST(Green, ExponentialBound) {
  Matrix a(2, 2);
  a << -1, 4, 0, 0.5;
  DichotomyCertificate c = autonomous_certificate(a);
  GreenKernel g(sample_evolution(ContinuousCocycle::autonomous(a), -4, 4, 0.25), c);
  for (double t = -4; t <= 4; t += 0.5)
    for (double s = -4; s <= 4; s += 0.75) {
      const double b = c.bound * std::exp(-c.exponent * std::abs(t - s));
      EXPECT_LE(operator_norm(g(t, s)), b * (1 + 1e-9)) << t << " " << s;
    }
}

TEST(ProjectionDistance, ConstantsAndWindows) {
  DichotomyCertificate a = autonomous_certificate(saddle());
  DichotomyCertificate b = a;
  Matrix p(2, 2);
  p << 1, 0.1, 0, 0;
  b.stable = {p};
  EXPECT_NEAR(projection_distance(a, b), 0.1, 1e-14);
  DichotomyCertificate s1;
  s1.stable = {p, p};
  s1.origin = 0;
  DichotomyCertificate s2 = s1;
  s2.origin = 5;
  EXPECT_THROW(projection_distance(s1, s2), WindowError);
}

TEST(ProjectionDistance, ContinuityBoundFormula) {
  EXPECT_NEAR(projection_continuity_bound(std::log(2.0), std::log(2.0), 0.1), (0.5 + 0.5) / (1 - 0.25) * 0.1, 1e-15);
  EXPECT_THROW(projection_continuity_bound(0.0, 1.0, 0.1), DomainError);
}

TEST(Ceil3, RoundsUp) {
  EXPECT_DOUBLE_EQ(ceil_3sig(1.0), 1.0);
  EXPECT_DOUBLE_EQ(ceil_3sig(1.2341), 1.24);
  EXPECT_DOUBLE_EQ(ceil_3sig(123.01), 124.0);
}
