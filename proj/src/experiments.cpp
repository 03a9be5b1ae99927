#include "rds/experiments.hpp"

#include "rds/dichotomy.hpp"
#include "rds/hyperbolic.hpp"
#include "rds/linalg.hpp"
#include "rds/noise.hpp"
#include "rds/robustness.hpp"
#include "rds/sde_bridge.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

namespace rds {

using Json = nlohmann::ordered_json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string short_num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// nlohmann writes NaN as null already; spelled out here for clarity.
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      if (!first) s_ += ',';
      s_ += h;
      first = false;
    }
    s_ += '\n';
  }
  Csv& cell(const std::string& v) {
    if (!row_.empty()) row_ += ',';
    row_ += v;
    return *this;
  }
  Csv& cell(double v) { return cell(format_double(v)); }
  Csv& cell(bool v) { return cell(std::string(v ? "true" : "false")); }
  void end() {
    s_ += row_ + '\n';
    row_.clear();
  }
  const std::string& str() const { return s_; }

 private:
  std::string s_;
  std::string row_;
};

Kappa make_kappa(const ExperimentConfig& c) {
  return c.kappa == "constant" ? Kappa::constant(c.kappa_value) : Kappa::rational();
}

Json error_json(const Error& e) {
  Json j;
  j["kind"] = to_string(e.kind());
  j["message"] = e.what();
  if (const auto* t = dynamic_cast<const ThresholdError*>(&e)) {
    j["value"] = num(t->value);
    j["threshold"] = num(t->threshold);
  }
  return j;
}

// ---- ou-check ----

struct Diagnostic {
  std::string name;
  double value;
  double target;
  double tolerance;
  bool pass() const { return std::abs(value - target) <= tolerance; }
};

SamplePath injected_path(const std::string& kind, double t_begin, double t_end, double h, double tail) {
  const TimeGrid g = TimeGrid::from_bounds(std::min(t_begin, -h) - 40.0, std::max(t_end, h), h);
  SamplePath p = kind == "zero" ? SamplePath::zero(g) : SamplePath::linear(g);
  return extend_for_ou(std::move(p), t_begin, t_end, tail);
}

// max over steps of |(z_{i+1} - z_i) / h + (z_i + z_{i+1}) / 2 - (w_{i+1} - w_i) / h|
double identity_residual(const SamplePath& p, double t_begin, double t_end, double tail) {
  const OuProcess z(p, t_begin, t_end, tail);
  const double h = z.h();
  double worst = 0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double dw = p.at(z.time(i + 1)) - p.at(z.time(i));
    const double r = (z.node(i + 1) - z.node(i)) / h + 0.5 * (z.node(i) + z.node(i + 1)) - dw / h;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace

ExperimentResult run_ou_check(const ExperimentConfig& c) {
  const bool wiener = c.ou_path == "wiener";
  const double h = c.h;
  std::vector<Diagnostic> rows;

  // stationary law of z*(omega) at t = 0
  std::vector<double> zs;
  zs.reserve(static_cast<std::size_t>(c.ou_paths));
  if (wiener) {
    for (int i = 0; i < c.ou_paths; ++i) {
      const SamplePath p = ou_ready_path(derive_seed(c.seed, static_cast<std::uint64_t>(i)), -h, h, h, c.tail_tol);
      zs.push_back(OuProcess(p, -h, h, c.tail_tol)(0.0));
    }
  } else {
    const SamplePath p = injected_path(c.ou_path, -h, h, h, c.tail_tol);
    zs.assign(static_cast<std::size_t>(c.ou_paths), OuProcess(p, -h, h, c.tail_tol)(0.0));
  }
  const double n = static_cast<double>(zs.size());
  double mean = 0;
  for (double z : zs) mean += z;
  mean /= n;
  double var = 0;
  for (double z : zs) var += (z - mean) * (z - mean);
  var /= n - 1;
  const double mean_target = c.ou_path == "linear" ? 1.0 : 0.0;
  rows.push_back({"mean", mean, mean_target, c.mean_tol});
  rows.push_back({"variance", var, wiener ? 0.5 : 0.0, c.variance_tol});

  // the injected paths have closed forms along the whole window
  if (!wiener) {
    const SamplePath p = injected_path(c.ou_path, c.t_min, c.t_max, h, c.tail_tol);
    const OuProcess z(p, c.t_min, c.t_max, c.tail_tol);
    double worst = 0;
    for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(z.node(i) - mean_target));
    rows.push_back({"window_max_error", worst, 0.0, 1e-4});
  }

  // |z*(theta_t omega)| / |t| at t = +-horizon
  {
    const double H = c.sublinearity_horizon;
    const SamplePath p = wiener ? ou_ready_path(c.seed, -H, H, h, c.tail_tol)
                                : injected_path(c.ou_path, -H, H, h, c.tail_tol);
    const double cps[] = {-H, H};
    double worst = 0;
    for (const auto& e : sublinearity_report(p, cps, c.tail_tol)) worst = std::max(worst, e.ratio);
    rows.push_back({"sublinearity", worst, 0.0, c.sublinearity_tol});
  }

  // dz = -z dt + d omega along a smooth path, trapezoid in time
  {
    SamplePath p;
    if (wiener) {
      const TimeGrid g = TimeGrid::from_bounds(c.t_min - 40.0, c.t_max, h);
      p = extend_for_ou(SamplePath::from_function(g, [](double t) { return std::sin(2 * t) + 0.3 * t; }, "smooth"),
                        c.t_min, c.t_max, c.tail_tol);
    } else {
      p = injected_path(c.ou_path, c.t_min, c.t_max, h, c.tail_tol);
    }
    rows.push_back({"identity_residual", identity_residual(p, c.t_min, c.t_max, c.tail_tol), 0.0, c.identity_tol});
  }

  ExperimentResult r;
  Csv csv({"diagnostic", "value", "target", "tolerance", "pass"});
  Json j;
  j["command"] = "ou-check";
  j["seed"] = c.seed;
  j["ou_path"] = c.ou_path;
  j["paths"] = c.ou_paths;
  j["h"] = c.h;
  Json diag = Json::array();
  bool all = true;
  for (const auto& d : rows) {
    csv.cell(d.name).cell(d.value).cell(d.target).cell(d.tolerance).cell(d.pass()).end();
    diag.push_back({{"diagnostic", d.name}, {"value", num(d.value)}, {"target", d.target},
                    {"tolerance", d.tolerance}, {"pass", d.pass()}});
    r.summary.push_back(d.name + " = " + short_num(d.value) + " (target " + short_num(d.target) + " +- " +
                        short_num(d.tolerance) + ") " + (d.pass() ? "pass" : "FAIL"));
    all = all && d.pass();
  }
  j["diagnostics"] = diag;
  j["passed"] = all;
  r.csv = csv.str();
  r.json = dump(j);
  r.exit_code = all ? kExitOk : kExitScientific;
  return r;
}

// ---- robustness ----

namespace {

Matrix square_from(const std::vector<double>& v) {
  const auto d = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(v.size()))));
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = v[static_cast<std::size_t>(i * d + k)];
  return m;
}

Json constants_json(const RobustConstants& k) {
  return Json{{"K", k.K},         {"alpha", k.alpha},           {"delta", k.delta},
              {"threshold", k.threshold}, {"rho", k.rho},       {"alpha_tilde", k.alpha_tilde},
              {"beta_tilde", k.beta_tilde}, {"D1", k.D1},       {"D2", k.D2},
              {"M", k.M}};
}

Json check_json(const AxiomCheck& a) {
  return Json{{"value", num(a.value)}, {"limit", num(a.limit)}, {"pass", a.pass}};
}

// sup over nodes of ||Pi_cert(n) - P||
double distance_to(const DichotomyCertificate& cert, const Matrix& p) {
  double worst = 0;
  for (const auto& s : cert.stable) worst = std::max(worst, operator_norm(Matrix(s - p)));
  return worst;
}

struct Instance {
  std::string name;
  Matrix a;
  Matrix b;
};

}  // namespace

ExperimentResult run_robustness(const ExperimentConfig& c) {
  std::vector<Instance> inst;
  inst.push_back({"scalar", Matrix::Constant(1, 1, c.scalar_base), Matrix::Constant(1, 1, c.scalar_perturbed)});
  {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 0.5;
    a(1, 1) = 2.0;
    Matrix j(2, 2);
    j << 0, 1, 1, 0;
    inst.push_back({"saddle", a, a + c.saddle_eps * j});
  }
  if (!c.matrix_a.empty()) inst.push_back({"user", square_from(c.matrix_a), square_from(c.matrix_b)});

  RobustOptions opt;
  opt.threshold_margin = c.threshold_margin;
  opt.verify_slack = c.verify_slack;

  ExperimentResult r;
  Json j;
  j["command"] = "robustness";
  j["n_min"] = c.n_min;
  j["n_max"] = c.n_max;
  j["threshold_margin"] = c.threshold_margin;
  j["verify_slack"] = c.verify_slack;
  Json list = Json::array();
  bool all = true;
  for (const auto& in : inst) {
    Json e;
    e["name"] = in.name;
    e["dim"] = in.a.rows();
    bool pass = false;
    try {
      const DichotomyCertificate base = autonomous_certificate_discrete(in.a);
      e["base"] = {{"K", base.bound}, {"alpha", base.exponent}};
      const RobustDichotomy rd = robust_dichotomy_discrete(DiscreteCocycle::constant(in.a), base,
                                                           DiscreteCocycle::constant(in.b), c.n_min, c.n_max, opt);
      e["delta_eff"] = rd.delta_eff;
      e["sup_perturbation"] = rd.sup_perturbation;
      e["constants"] = constants_json(rd.constants);
      e["certificate"] = {{"K", rd.certificate.bound}, {"alpha", rd.certificate.exponent}};
      const VerificationReport& v = rd.verification;
      e["verification"] = {{"passed", v.passed()},
                           {"slack", v.slack},
                           {"commutation", check_json(v.commutation)},
                           {"forward_decay", check_json(v.forward_decay)},
                           {"backward_decay", check_json(v.backward_decay)},
                           {"isomorphism", check_json(v.isomorphism)}};
      pass = v.passed();
      Json checks = Json::array();
      // the perturbed map's own projection, by eigendecomposition
      const SpectralSplit oracle = spectral_projection_discrete(in.b);
      const double err = distance_to(rd.certificate, oracle.stable);
      checks.push_back({{"name", "projection_matches_spectral"}, {"value", err}, {"limit", 1e-8}, {"pass", err <= 1e-8}});
      pass = pass && err <= 1e-8;
      const double dist = projection_distance(base, rd.certificate);
      const double bound = projection_continuity_bound(base.exponent, rd.constants.alpha_tilde, rd.delta_eff);
      checks.push_back({{"name", "projection_continuity"}, {"value", dist}, {"limit", bound}, {"pass", dist <= bound}});
      pass = pass && dist <= bound;
      const OrbitDiagnostic od = orbit_diagnostic(DiscreteCocycle::constant(in.b), rd, c.n_min, c.n_max);
      checks.push_back({{"name", "orbit_decay"},
                        {"forward_rate", num(od.forward_rate)},
                        {"forward_required", od.forward_required},
                        {"backward_rate", num(od.backward_rate)},
                        {"backward_required", od.backward_required},
                        {"pass", od.passed()}});
      pass = pass && od.passed();
      if (in.a.rows() == 1) {
        const double rate = std::abs(std::log(std::abs(in.b(0, 0))));
        const bool ok = rd.constants.alpha_tilde <= rate + 1e-9;
        checks.push_back({{"name", "alpha_tilde_below_rate"}, {"value", rd.constants.alpha_tilde},
                          {"limit", rate + 1e-9}, {"pass", ok}});
        pass = pass && ok;
      }
      e["checks"] = checks;
      r.summary.push_back(in.name + ": delta_eff " + short_num(rd.delta_eff) + ", alpha~ " +
                          short_num(rd.constants.alpha_tilde) + ", M " + short_num(rd.constants.M) + " " +
                          (pass ? "pass" : "FAIL"));
    } catch (const Error& err) {
      e["error"] = error_json(err);
      r.summary.push_back(in.name + ": " + to_string(err.kind()) + " error: " + err.what());
    }
    e["passed"] = pass;
    all = all && pass;
    list.push_back(e);
  }
  j["instances"] = list;
  j["passed"] = all;
  r.json = dump(j);
  r.exit_code = all ? kExitOk : kExitScientific;
  return r;
}

// ---- hyperbolic ----

ExperimentResult run_hyperbolic(const ExperimentConfig& c) {
  ExperimentResult r;
  Csv csv({"model", "eta", "sup_distance", "epsilon", "eta_cutoff", "certified", "status", "alpha_tilde", "M_bound",
           "seed"});
  Json j;
  j["command"] = "hyperbolic";
  j["seed"] = c.seed;
  j["t_min"] = c.t_min;
  j["t_max"] = c.t_max;
  j["h"] = c.h;
  Json models = Json::array();
  bool all = true;

  const SamplePath path = ou_ready_path(c.seed, c.t_min, c.t_max, c.h, c.tail_tol);
  auto ou = std::make_shared<const OuProcess>(path, c.t_min, c.t_max, c.tail_tol);
  for (const auto& name : c.models) {
    const Kappa kappa = make_kappa(c);
    const SemilinearProblem p = name == "cubic" ? cubic_ou_model(ou, kappa, c.radius)
                                                : additive_ou_model(ou, kappa, c.radius);
    HyperbolicOptions ho;
    ho.t_begin = c.t_min;
    ho.t_end = c.t_max;
    ho.h = c.h;
    ho.tol = c.tol;
    ho.require_contraction = false;
    Json m;
    m["model"] = name;
    Json rows = Json::array();
    try {
      ho.calibration = calibrate_eta(p, ho);
      m["M"] = ho.calibration->M;
      m["beta"] = ho.calibration->beta;
      m["epsilon"] = ho.calibration->epsilon;
      m["eta_cutoff"] = ho.calibration->selection.eta;
    } catch (const Error& e) {
      m["error"] = error_json(e);
      r.summary.push_back(name + ": " + e.what());
      all = false;
      models.push_back(m);
      continue;
    }
    for (double eta : c.eta_grid) {
      Json row;
      row["eta"] = eta;
      double dist = kNan, at = kNan, mb = kNan, eps = ho.calibration->epsilon, cut = ho.calibration->selection.eta;
      bool certified = false;
      std::string status = "failed";
      try {
        HyperbolicSolutionCertificate hc = find_hyperbolic_solution(p, eta, ho);
        certify_hyperbolic(p, hc, CertifyOptions{});
        dist = hc.sup_distance;
        eps = hc.epsilon;
        cut = hc.eta_cutoff;
        certified = hc.status == HyperbolicStatus::Certified;
        status = to_string(hc.status);
        bool lin_ok = false;
        if (hc.linearization) {
          at = hc.linearization->constants.alpha_tilde;
          mb = hc.linearization->certificate.bound;
          lin_ok = hc.linearization->verification.passed();
        }
        row["iterations"] = hc.iterations;
        row["residual"] = num(hc.residual);
        row["contraction"] = num(hc.contraction);
        row["lambda"] = num(hc.lambda);
        row["note"] = hc.note;
        if (certified && !(dist < eps && lin_ok)) {
          all = false;
          row["violation"] = "certified row with sup_distance >= epsilon or a failing linearization dichotomy";
        }
      } catch (const Error& e) {
        row["error"] = error_json(e);
      }
      row["sup_distance"] = num(dist);
      row["epsilon"] = num(eps);
      row["eta_cutoff"] = num(cut);
      row["certified"] = certified;
      row["status"] = status;
      row["alpha_tilde"] = num(at);
      row["M_bound"] = num(mb);
      rows.push_back(row);
      csv.cell(name).cell(eta).cell(dist).cell(eps).cell(cut).cell(certified).cell(status).cell(at).cell(mb)
          .cell(std::to_string(c.seed)).end();
      r.summary.push_back(name + " eta " + short_num(eta) + ": sup_distance " + short_num(dist) + ", " + status);
    }
    m["rows"] = rows;
    models.push_back(m);
  }
  j["models"] = models;
  j["passed"] = all;
  r.csv = csv.str();
  r.json = dump(j);
  r.exit_code = all ? kExitOk : kExitScientific;
  return r;
}

// ---- wave ----

ExperimentResult run_wave(const ExperimentConfig& c) {
  WaveDemoOptions o;
  o.modes = c.modes;
  o.damping = c.damping;
  const double a = c.f_linear, b = c.f_cubic;
  o.f = [a, b](double u) { return a * u - b * u * u * u; };
  o.df = [a, b](double u) { return a - 3 * b * u * u; };
  o.eta_grid = c.eta_grid;
  o.seed = c.seed;
  o.pattern = parse_noise_pattern(c.noise);
  o.kappa = make_kappa(c);
  o.hyperbolic.t_begin = c.t_min;
  o.hyperbolic.t_end = c.t_max;
  o.hyperbolic.h = c.h;
  o.hyperbolic.tol = c.tol;

  ExperimentResult r;
  Json j;
  j["command"] = "wave";
  j["modes"] = c.modes;
  j["damping"] = c.damping;
  j["f_linear"] = c.f_linear;
  j["f_cubic"] = c.f_cubic;
  j["noise"] = c.noise;
  j["seed"] = c.seed;
  Csv csv({"eta", "sup_dist_v", "sup_dist_y", "certified", "alpha_tilde", "M_bound", "seed"});
  WaveDemoReport rep;
  try {
    rep = run_wave_demo(o);
  } catch (const Error& e) {
    j["error"] = error_json(e);
    j["passed"] = false;
    r.summary.push_back(std::string("wave: ") + to_string(e.kind()) + " error: " + e.what());
    r.csv = csv.str();
    r.json = dump(j);
    r.exit_code = kExitScientific;
    return r;
  }
  j["gap"] = rep.gap;
  j["ou_max_abs"] = rep.ou_max_abs;
  Json rows = Json::array();
  bool all = true;
  for (const auto& row : rep.rows) {
    const bool bad = row.certified && !(row.sup_dist_v < row.epsilon);
    all = all && !bad;
    rows.push_back({{"eta", row.eta},
                    {"sup_dist_v", num(row.sup_dist_v)},
                    {"sup_dist_y", num(row.sup_dist_y)},
                    {"certified", row.certified},
                    {"alpha_tilde", num(row.alpha_tilde)},
                    {"M_bound", num(row.M_bound)},
                    {"status", row.status},
                    {"eta_cutoff", num(row.eta_cutoff)},
                    {"epsilon", num(row.epsilon)},
                    {"sup_linear_perturbation", num(row.sup_linear_perturbation)},
                    {"note", row.note}});
    csv.cell(row.eta).cell(row.sup_dist_v).cell(row.sup_dist_y).cell(row.certified).cell(row.alpha_tilde)
        .cell(row.M_bound).cell(std::to_string(row.seed)).end();
    r.summary.push_back("eta " + short_num(row.eta) + ": sup_dist_v " + short_num(row.sup_dist_v) + ", sup_dist_y " +
                        short_num(row.sup_dist_y) + ", " + row.status);
  }
  j["rows"] = rows;
  j["passed"] = all;
  r.csv = csv.str();
  r.json = dump(j);
  r.exit_code = all ? kExitOk : kExitScientific;
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  if (c.command == "ou-check") return run_ou_check(c);
  if (c.command == "robustness") return run_robustness(c);
  if (c.command == "hyperbolic") return run_hyperbolic(c);
  if (c.command == "wave") return run_wave(c);
  throw ConfigError("unknown command '" + c.command + "'");
}

}  // namespace rds
