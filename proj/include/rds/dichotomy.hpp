#ifndef RDS_DICHOTOMY_HPP
#define RDS_DICHOTOMY_HPP

#include "rds/cocycle.hpp"
#include "rds/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rds {

struct SpectralSplit {
  Matrix stable;
  Matrix unstable;
  double gap = 0;  // distance of the spectrum from the splitting curve
  Eigen::VectorXcd eigenvalues;
  int stable_dim = 0;
};

// Split by the sign of the real part (flows).
SpectralSplit spectral_projection(const Matrix& a, double gap_tol = 1e-8);
// Split by modulus against 1 (maps); gap is measured in log-modulus.
SpectralSplit spectral_projection_discrete(const Matrix& a, double gap_tol = 1e-8);

// Projection family on nodes origin + i * spacing, with bound K and exponent alpha.
// A single stored projection means the family is constant in time.
struct DichotomyCertificate {
  std::vector<Matrix> stable;
  double origin = 0;
  double spacing = 1;
  double bound = 1;
  double exponent = 0;
  bool discrete = false;
  std::string note;

  bool constant() const { return stable.size() == 1; }
  std::size_t nodes() const { return stable.size(); }
  double time(std::size_t i) const { return origin + static_cast<double>(i) * spacing; }
  int dim() const { return static_cast<int>(stable.front().rows()); }
  // Throws WindowError when t is not one of the nodes.
  const Matrix& stable_at(double t) const;
  Matrix unstable_at(double t) const;
};

struct ScanOptions {
  double margin = 0.1;       // exponent = (1 - margin) * gap
  double step = 1.0 / 64.0;  // scan spacing (flows)
  double length = 0;         // 0 picks a length from the gap
};

DichotomyCertificate autonomous_certificate(const Matrix& a, const ScanOptions& opt = {});
DichotomyCertificate autonomous_certificate_discrete(const Matrix& a, const ScanOptions& opt = {0.0, 1.0, 0});

// Rounds up to three significant digits.
double ceil_3sig(double x);

// Step matrices between consecutive nodes origin + i * spacing.
struct SampledEvolution {
  double origin = 0;
  double spacing = 1;
  std::vector<Matrix> steps;
  std::size_t nodes() const { return steps.size() + 1; }
  double time(std::size_t i) const { return origin + static_cast<double>(i) * spacing; }
  int dim() const { return static_cast<int>(steps.front().rows()); }
};

SampledEvolution sample_evolution(const DiscreteCocycle& c, std::int64_t n_begin, std::int64_t n_end);
SampledEvolution sample_evolution(const ContinuousCocycle& c, double t_begin, double t_end,
                                  double spacing);

struct AxiomCheck {
  std::string name;
  double value = 0;  // worst observed residual or ratio
  double limit = 0;
  bool pass = false;
};

struct VerificationReport {
  AxiomCheck commutation;
  AxiomCheck forward_decay;   // max ||phi Pi^s|| / (K e^{-alpha t})
  AxiomCheck backward_decay;  // max ||phi^{-1} Pi^u|| / (K e^{-alpha t})
  AxiomCheck isomorphism;     // worst restricted condition number
  double inverse_residual = 0;
  bool isomorphism_violation = false;
  double slack = 1;
  std::size_t nodes = 0;
  bool passed() const {
    return commutation.pass && forward_decay.pass && backward_decay.pass && isomorphism.pass;
  }
};

struct VerifyOptions {
  double slack = 1.0;
  double commutation_tol = 1e-6;
  double condition_limit = 1e12;
  double residual_tol = 1e-6;
  std::size_t horizon = 0;  // nodes ahead/behind to test; 0 means the whole window
};

VerificationReport verify_dichotomy(const SampledEvolution& evo, const DichotomyCertificate& cert,
                                    const VerifyOptions& opt = {});

// G(t, s) = phi(t, s) Pi^s(s) for t >= s and -phi(t, s) Pi^u(s) for t < s.
class GreenKernel {
 public:
  GreenKernel(SampledEvolution evo, DichotomyCertificate cert);
  Matrix operator()(double t, double s) const;
  // Limit of G(t, s) as t increases to s.
  Matrix backward_limit(double s) const;
  const SampledEvolution& evolution() const { return evo_; }
  const DichotomyCertificate& certificate() const { return cert_; }

 private:
  std::size_t node(double t) const;
  SampledEvolution evo_;
  DichotomyCertificate cert_;
  std::vector<Matrix> stable_;
  std::vector<Matrix> unstable_;
  std::vector<Matrix> back_;  // restricted inverses node i+1 -> i
};

Matrix green_eval(const GreenKernel& g, double t, double s);

// sup over common nodes of ||Pi^s_A - Pi^s_B||.
double projection_distance(const DichotomyCertificate& a, const DichotomyCertificate& b);
// (e^{-alpha_A} + e^{-alpha_B}) / (1 - e^{-(alpha_A + alpha_B)}) * eps
double projection_continuity_bound(double alpha_a, double alpha_b, double eps);

}  // namespace rds

#endif
