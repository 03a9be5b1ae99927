#include "rds/sde_bridge.hpp"
#include "rds/cocycle.hpp"
#include "rds/dichotomy.hpp"
#include "rds/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

using namespace rds;

namespace {

Vector vec1(double x) { return Vector::Constant(1, x); }

// scalar dy = a y dt + f(y) dt + eta kappa y o dW
StratonovichSpec scalar_spec(double a, VectorField f) {
  StratonovichSpec s;
  s.linear_part = Matrix::Constant(1, 1, a);
  s.f = std::move(f);
  s.equilibrium = vec1(0);
  return s;
}

VectorField zero_field() {
  return [](const Vector& y) { return Vector(Vector::Zero(y.size())); };
}

std::shared_ptr<const OuProcess> wiener_ou(std::uint64_t seed, double t0, double t1) {
  return std::make_shared<const OuProcess>(ou_ready_path(seed, t0, t1), t0, t1);
}

// omega(s) = s on a long enough left window; z* = 1 up to quadrature error.
std::shared_ptr<const OuProcess> linear_ou(double t0, double t1) {
  SamplePath p = SamplePath::linear(TimeGrid::from_bounds(t0 - 60.0, t1 + 1.0, 1.0 / 64.0));
  return std::make_shared<const OuProcess>(p, t0, t1);
}

}  // namespace

TEST(NoisePatternNames, RoundTrip) {
  for (NoisePattern p : {NoisePattern::Both, NoisePattern::Position, NoisePattern::Velocity})
    EXPECT_EQ(parse_noise_pattern(to_string(p)), p);
  EXPECT_THROW(parse_noise_pattern("sideways"), ConfigError);
}

TEST(Transform, ZeroEtaGivesDeterministicField) {
  VectorField f = [](const Vector& y) {
    Vector r(2);
    r << y(1) * y(1), -std::sin(y(0));
    return r;
  };
  StratonovichSpec s;
  s.linear_part = Matrix::Identity(2, 2);
  s.f = f;
  s.equilibrium = Vector::Zero(2);
  s.noise_shape = Vector(Vector::Zero(2));
  s.noise_shape(0) = 1;
  RandomOde ode = transform(s, wiener_ou(3, -5, 5));
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 50; ++i) {
    Vector y(2);
    y << u(gen), u(gen);
    const double t = 5 * u(gen);
    EXPECT_EQ(ode.problem.eval(0.0, t, y), f(y));
    EXPECT_EQ(Matrix(ode.noise_coefficient(0.0, t)), Matrix(Matrix::Zero(2, 2)));
    EXPECT_EQ(ode.to_original(0.0, t, y), y);
  }
}

TEST(Transform, LinearScalarField) {
  const double a = -0.7;
  const double eta = 0.3;
  RandomOde ode = transform(scalar_spec(a, zero_field()), wiener_ou(5, -8, 8));
  const Kappa k = Kappa::rational();
  for (double t = -8; t <= 8; t += 0.37) {
    const double z = (*ode.ou)(t);
    const double c = eta * (k.value(t) - k.derivative(t)) * z;
    for (double v : {-1.3, 0.2, 2.0}) {
      // B v is kept in the linear part; f_eta carries only the noise term
      EXPECT_NEAR(ode.problem.eval(eta, t, vec1(v))(0), c * v, 1e-14 * (1 + std::abs(c * v)));
      EXPECT_NEAR(ode.problem.jac(eta, t, vec1(v))(0, 0), c, 1e-14 * (1 + std::abs(c)));
    }
  }
}

TEST(Transform, ConjugatesNonlinearity) {
  // f(y) = y^2: e^{-s} (e^{s} v)^2 = e^{s} v^2
  VectorField f = [](const Vector& y) { return vec1(y(0) * y(0)); };
  RandomOde ode = transform(scalar_spec(-1, f), wiener_ou(8, -4, 4));
  const Kappa k = Kappa::rational();
  const double eta = 0.5;
  for (double t = -4; t <= 4; t += 0.5) {
    const double z = (*ode.ou)(t);
    const double s = eta * k.value(t) * z;
    const double c = eta * (k.value(t) - k.derivative(t)) * z;
    const double v = 0.8;
    EXPECT_NEAR(ode.problem.eval(eta, t, vec1(v))(0), std::exp(s) * v * v + c * v, 1e-13);
  }
}

TEST(Transform, RoundTripSolvesStratonovichOnSmoothPath) {
  // omega(s) = s makes dW = dt, so y' = (a + eta kappa) y with
  // y(t) = y0 exp(a (t - t0) + eta (atan t - atan t0)).
  const double a = -0.5, eta = 0.4, t0 = -3, t1 = 3, y0 = 1.2;
  RandomOde ode = transform(scalar_spec(a, zero_field()), linear_ou(t0, t1));
  for (std::size_t i = 0; i < ode.ou->size(); ++i) EXPECT_NEAR(ode.ou->node(i), 1.0, 1e-4);

  const double v0 = ode.to_transformed(eta, t0, vec1(y0))(0);
  std::vector<double> times;
  std::vector<Vector> vs;
  Vector v = vec1(v0);
  for (int i = 0; i <= 24; ++i) {
    const double t = t0 + 0.25 * i;
    if (i > 0) v = rk4_flow(ode.problem, eta, t - 0.25, t, v, 1.0 / 64.0);
    times.push_back(t);
    vs.push_back(v);
  }
  const auto y = inverse_transform(ode, eta, times, vs);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = times[i];
    const double exact = y0 * std::exp(a * (t - t0) + eta * (std::atan(t) - std::atan(t0)));
    EXPECT_NEAR(y[i](0), exact, 1e-4 * exact) << "t = " << t;
  }
}

TEST(Transform, InverseIsExact) {
  StratonovichSpec s;
  s.linear_part = Matrix::Identity(3, 3);
  s.f = zero_field();
  s.noise_shape = Vector(3);
  s.noise_shape << 1, 0, 1;
  RandomOde ode = transform(s, wiener_ou(21, -6, 6));
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    const double t = -6 + 12 * (i / 199.0);
    const double eta = (i % 10) / 9.0;
    Vector y(3);
    y << n(gen), n(gen), n(gen);
    const Vector back = ode.to_original(eta, t, ode.to_transformed(eta, t, y));
    EXPECT_LE((back - y).norm(), 4 * 2.2e-16 * y.norm());
  }
  EXPECT_THROW(inverse_transform(ode, 0.1, {0.0, 1.0}, {Vector::Zero(3)}), DomainError);
}

TEST(Transform, StructuredPatternExponential) {
  StratonovichSpec s;
  s.linear_part = Matrix::Identity(2, 2);
  s.f = zero_field();
  s.noise_shape = Vector(2);
  s.noise_shape << 1, 0;
  RandomOde ode = transform(s, wiener_ou(9, -3, 3));
  const double eta = 0.7;
  for (double t = -3; t <= 3; t += 0.25) {
    const double e = std::exp(eta * Kappa::rational().value(t) * (*ode.ou)(t));
    const Vector d = ode.scaling(eta, t);
    EXPECT_NEAR(d(0), e, 1e-14 * e);
    EXPECT_EQ(d(1), 1.0);
    Vector y(2);
    y << 2.0, -3.0;
    const Vector v = ode.to_transformed(eta, t, y);
    EXPECT_NEAR(v(0), 2.0 / e, 1e-14);
    EXPECT_EQ(v(1), -3.0);
  }
}

TEST(Transform, StructuredConjugationCorrection) {
  // B = [[0,1],[-1,0]], noise on the first coordinate only:
  // E^{-1} B E - B = [[0, 1/e - 1], [-(e - 1), 0]]
  StratonovichSpec s;
  s.linear_part = Matrix(2, 2);
  s.linear_part << 0, 1, -1, 0;
  s.f = zero_field();
  s.noise_shape = Vector(2);
  s.noise_shape << 1, 0;
  RandomOde ode = transform(s, wiener_ou(10, -2, 2));
  const double eta = 0.6, t = 0.75;
  const double e = ode.scaling(eta, t)(0);
  const double c = ode.noise_coefficient(eta, t)(0, 0);
  Vector v(2);
  v << 0.3, -1.1;
  Vector expect(2);
  expect << (1 / e - 1) * v(1) + c * v(0), -(e - 1) * v(0);
  EXPECT_LT((ode.problem.eval(eta, t, v) - expect).norm(), 1e-14);
}

TEST(Transform, RejectsBadShape) {
  StratonovichSpec s = scalar_spec(-1, zero_field());
  s.noise_shape = vec1(0.5);
  EXPECT_THROW(transform(s, wiener_ou(1, -1, 1)), DomainError);
  s.noise_shape = Vector::Ones(2);
  EXPECT_THROW(transform(s, wiener_ou(1, -1, 1)), DomainError);
  s.noise_shape = Vector();
  EXPECT_THROW(transform(s, nullptr), DomainError);
}

TEST(Transform, PerturbationNormIsEtaTimesM2) {
  const double t0 = -6, t1 = 6, eta = 0.25;
  const SamplePath path = ou_ready_path(17, t0, t1);
  RandomOde ode = transform(scalar_spec(-1, zero_field()), path, t0, t1);
  const TimeGrid window = TimeGrid::from_bounds(t0, t1, path.grid().h());
  const NoiseBounds nb = noise_bounds(path, Kappa::rational(), window, eta);
  double sup = 0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double t = window.time(i);
    if (t < t0 || t > t1) continue;
    sup = std::max(sup, operator_norm(ode.noise_coefficient(eta, t)));
  }
  EXPECT_NEAR(sup, eta * nb.m2, 1e-9 * nb.m2);
  EXPECT_NEAR(nb.eta_m2, eta * nb.m2, 1e-15);
}

TEST(OuReadyPath, ExtendsUntilTailFits) {
  const SamplePath p = ou_ready_path(99, -20, 20);
  EXPECT_NO_THROW(OuProcess(p, -20, 20));
  const SamplePath q = ou_ready_path(99, -20, 20);
  EXPECT_EQ(p.values(), q.values());
}

TEST(Models, CubicReducesAtZeroEta) {
  auto ou = wiener_ou(2, -5, 5);
  SemilinearProblem p = cubic_ou_model(ou, Kappa::rational());
  EXPECT_NO_THROW(p.validate());
  for (double y : {-0.4, 0.0, 0.3})
    for (double t : {-4.0, 0.0, 3.5}) {
      EXPECT_EQ(p.eval(0.0, t, vec1(y)), p.eval_f0(vec1(y)));
      const double c = (Kappa::rational().value(t) - Kappa::rational().derivative(t)) * (*ou)(t);
      EXPECT_NEAR(p.eval(0.1, t, vec1(y))(0), y * y * y + 0.1 * c * (1 + y), 1e-15);
    }
  SemilinearProblem q = additive_ou_model(ou, Kappa::rational());
  EXPECT_NO_THROW(q.validate());
}

TEST(WaveSystem, SingleModeLinearization) {
  WaveSystem w = build_wave_system(1, 1.0, [](double u) { return u - u * u * u; },
                                   [](double u) { return 1 - 3 * u * u; });
  Matrix expect(2, 2);
  expect << 0, 1, -M_PI * M_PI + 1, -1;
  EXPECT_LT(operator_norm(Matrix(w.linearization - expect)), 1e-12);
  const double im = std::sqrt(M_PI * M_PI - 1.25);
  for (Eigen::Index i = 0; i < 2; ++i) {
    EXPECT_NEAR(w.split.eigenvalues(i).real(), -0.5, 1e-12);
    EXPECT_NEAR(std::abs(w.split.eigenvalues(i).imag()), im, 1e-12);
  }
  EXPECT_EQ(w.split.stable_dim, 2);
  EXPECT_LT(w.split.unstable.norm(), 1e-12);
}

TEST(WaveSystem, EigenvaluesGrowQuadratically) {
  WaveSystem w = build_wave_system(3, 1.0, [](double) { return 0.0; }, [](double) { return 0.0; });
  EXPECT_EQ(w.lambda[1] / w.lambda[0], 4.0);
  EXPECT_NEAR(w.lambda[2] / w.lambda[0], 9.0, 1e-14);
}

TEST(WaveSystem, AnalysisInvertsSynthesis) {
  for (int n = 1; n <= 8; ++n) {
    WaveSystem w = build_wave_system(n, 2.0, [](double u) { return u - u * u * u; },
                                     [](double u) { return 1 - 3 * u * u; });
    const Matrix ps = w.analysis * w.synthesis;
    EXPECT_LT(operator_norm(Matrix(ps - Matrix::Identity(n, n))), 1e-13) << "N = " << n;
  }
}

TEST(WaveSystem, CubicProjectionIsExact) {
  // u^3 with u a two-mode sine polynomial; compare against a fine midpoint rule.
  WaveSystem w = build_wave_system(2, 1.0, [](double u) { return u * u * u; },
                                   [](double u) { return 3 * u * u; });
  Vector y = Vector::Zero(4);
  y << 0.3, -0.2, 0, 0;
  const Vector fy = w.spec.f(y);
  const int m = 200000;
  for (int k = 1; k <= 2; ++k) {
    double acc = 0;
    for (int j = 0; j < m; ++j) {
      const double x = (j + 0.5) / m;
      const double u = std::sqrt(2.0) * (0.3 * std::sin(M_PI * x) - 0.2 * std::sin(2 * M_PI * x));
      acc += u * u * u * std::sqrt(2.0) * std::sin(k * M_PI * x);
    }
    EXPECT_NEAR(fy(1 + k), acc / m, 1e-9);
  }
  EXPECT_EQ(fy(0), 0.0);
  EXPECT_EQ(fy(1), 0.0);
}

TEST(WaveSystem, LinearDampedWaveCertifies) {
  for (int n = 1; n <= 8; ++n) {
    WaveSystem w = build_wave_system(n, 1.0, [](double) { return 0.0; }, [](double) { return 0.0; });
    EXPECT_EQ(w.split.stable_dim, 2 * n);
    EXPECT_NEAR(w.split.gap, 0.5, 1e-10);
    DichotomyCertificate c = autonomous_certificate(w.linearization);
    SampledEvolution e = sample_evolution(ContinuousCocycle::autonomous(w.linearization), 0, 10, 1.0 / 16.0);
    EXPECT_TRUE(verify_dichotomy(e, c).passed()) << "N = " << n;
  }
}

TEST(WaveSystem, HyperbolicForEveryTruncation) {
  // each 2x2 block has trace -beta and determinant lambda_k - f'(0) > 0
  for (int n = 1; n <= 8; ++n) {
    WaveSystem w = build_wave_system(n, 2.0, [](double u) { return u - u * u * u; },
                                     [](double u) { return 1 - 3 * u * u; });
    EXPECT_EQ(w.split.stable_dim, 2 * n);
    EXPECT_GT(w.split.gap, 0.0);
    for (Eigen::Index i = 0; i < w.split.eigenvalues.size(); ++i) EXPECT_LT(w.split.eigenvalues(i).real(), 0.0);
  }
}

TEST(WaveSystem, NonHyperbolicEquilibriumIsRejected) {
  const double s = M_PI * M_PI;
  try {
    build_wave_system(3, 1.0, [s](double u) { return s * u; }, [s](double) { return s; });
    FAIL() << "expected NonHyperbolicError";
  } catch (const NonHyperbolicError& e) {
    EXPECT_NE(std::string(e.what()).find("lambda_1"), std::string::npos);
  }
  EXPECT_THROW(build_wave_system(0, 1.0, [](double) { return 0.0; }, [](double) { return 0.0; }), ConfigError);
  EXPECT_THROW(build_wave_system(2, 0.0, [](double) { return 0.0; }, [](double) { return 0.0; }), ConfigError);
}

TEST(WaveDemo, ZeroEtaRowIsTheEquilibrium) {
  WaveDemoOptions opt;
  opt.modes = 2;
  opt.damping = 1.0;
  opt.eta_grid = {0.0};
  opt.hyperbolic.t_begin = -12;
  opt.hyperbolic.t_end = 12;
  WaveDemoReport r = run_wave_demo(opt);
  ASSERT_EQ(r.rows.size(), 1u);
  const WaveDemoRow& row = r.rows[0];
  EXPECT_TRUE(row.certified) << row.note;
  EXPECT_EQ(row.sup_dist_v, 0.0);
  EXPECT_EQ(row.sup_dist_y, 0.0);
  EXPECT_FALSE(std::isnan(row.alpha_tilde));
  EXPECT_NEAR(r.gap, 0.5, 1e-10);
}

TEST(WaveDemo, FailingRowsAreRecorded) {
  WaveDemoOptions opt;
  opt.modes = 1;
  opt.damping = 1.0;
  opt.eta_grid = {5.0, 0.0};
  opt.hyperbolic.t_begin = -8;
  opt.hyperbolic.t_end = 8;
  WaveDemoReport r = run_wave_demo(opt);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.rows[0].certified);
  EXPECT_FALSE(r.rows[0].note.empty());
  EXPECT_TRUE(r.rows[1].certified);
}
