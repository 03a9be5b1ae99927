#include "rds/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rds {

namespace {

// A failed check that knows which field it is about, so the parser can add the line.
struct FieldError : ConfigError {
  FieldError(std::string f, const std::string& msg)
      : ConfigError("field '" + f + "': " + msg), field(std::move(f)), bare(msg) {}
  std::string field;
  std::string bare;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double to_double(const std::string& field, const std::string& v) {
  double x = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x))
    throw FieldError(field, "expected a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& field, const std::string& v) {
  long x = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw FieldError(field, "expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& field, const std::string& v) {
  std::uint64_t x = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw FieldError(field, "expected a non-negative integer, got '" + v + "'");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

struct Field {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
using Member = T ExperimentConfig::*;

Field num(const char* name, Member<double> m) {
  return {name, [=](ExperimentConfig& c, const std::string& v) { c.*m = to_double(name, v); },
          [=](const ExperimentConfig& c) { return fmt(c.*m); }};
}

Field integer(const char* name, Member<int> m) {
  return {name,
          [=](ExperimentConfig& c, const std::string& v) {
            const long x = to_long(name, v);
            if (x < -2147483647L || x > 2147483647L) throw FieldError(name, "out of range");
            c.*m = static_cast<int>(x);
          },
          [=](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field long_int(const char* name, Member<long> m) {
  return {name, [=](ExperimentConfig& c, const std::string& v) { c.*m = to_long(name, v); },
          [=](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

Field text(const char* name, Member<std::string> m) {
  return {name, [=](ExperimentConfig& c, const std::string& v) { c.*m = v; },
          [=](const ExperimentConfig& c) { return c.*m; }};
}

Field numbers(const char* name, Member<std::vector<double>> m) {
  return {name,
          [=](ExperimentConfig& c, const std::string& v) {
            std::vector<double> xs;
            for (const auto& s : split_list(v)) xs.push_back(to_double(name, s));
            c.*m = std::move(xs);
          },
          [=](const ExperimentConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < (c.*m).size(); ++i) s += (i ? "," : "") + fmt((c.*m)[i]);
            return s;
          }};
}

Field words(const char* name, Member<std::vector<std::string>> m) {
  return {name, [=](ExperimentConfig& c, const std::string& v) { c.*m = split_list(v); },
          [=](const ExperimentConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < (c.*m).size(); ++i) s += (i ? "," : "") + (c.*m)[i];
            return s;
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      text("command", &ExperimentConfig::command),
      {"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      text("out", &ExperimentConfig::out),
      num("t_min", &ExperimentConfig::t_min),
      num("t_max", &ExperimentConfig::t_max),
      num("h", &ExperimentConfig::h),
      num("tail_tol", &ExperimentConfig::tail_tol),
      num("tol", &ExperimentConfig::tol),
      numbers("eta_grid", &ExperimentConfig::eta_grid),
      text("kappa", &ExperimentConfig::kappa),
      num("kappa_value", &ExperimentConfig::kappa_value),
      text("ou_path", &ExperimentConfig::ou_path),
      integer("ou_paths", &ExperimentConfig::ou_paths),
      num("variance_tol", &ExperimentConfig::variance_tol),
      num("mean_tol", &ExperimentConfig::mean_tol),
      num("identity_tol", &ExperimentConfig::identity_tol),
      num("sublinearity_horizon", &ExperimentConfig::sublinearity_horizon),
      num("sublinearity_tol", &ExperimentConfig::sublinearity_tol),
      num("scalar_base", &ExperimentConfig::scalar_base),
      num("scalar_perturbed", &ExperimentConfig::scalar_perturbed),
      num("saddle_eps", &ExperimentConfig::saddle_eps),
      numbers("matrix_a", &ExperimentConfig::matrix_a),
      numbers("matrix_b", &ExperimentConfig::matrix_b),
      long_int("n_min", &ExperimentConfig::n_min),
      long_int("n_max", &ExperimentConfig::n_max),
      num("threshold_margin", &ExperimentConfig::threshold_margin),
      num("verify_slack", &ExperimentConfig::verify_slack),
      words("models", &ExperimentConfig::models),
      num("radius", &ExperimentConfig::radius),
      integer("modes", &ExperimentConfig::modes),
      num("damping", &ExperimentConfig::damping),
      num("f_linear", &ExperimentConfig::f_linear),
      num("f_cubic", &ExperimentConfig::f_cubic),
      text("noise", &ExperimentConfig::noise),
  };
  return f;
}

void require(bool ok, const char* field, const std::string& msg) {
  if (!ok) throw FieldError(field, msg);
}

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

bool is_square(std::size_t n) {
  const auto r = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n))));
  return r * r == n;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.command.empty() || one_of(c.command, {"ou-check", "robustness", "hyperbolic", "wave"}), "command",
          "unknown command '" + c.command + "'");
  require(!c.out.empty(), "out", "must not be empty");
  require(c.h > 0, "h", "must be > 0");
  require(c.t_min < 0, "t_min", "must be < 0");
  require(c.t_max > 0, "t_max", "must be > 0");
  require(c.tail_tol > 0, "tail_tol", "must be > 0");
  require(c.tol > 0, "tol", "must be > 0");
  require(!c.eta_grid.empty(), "eta_grid", "must not be empty");
  for (double e : c.eta_grid) require(e >= 0 && e <= 1, "eta_grid", "entries must lie in [0, 1]");
  require(std::is_sorted(c.eta_grid.begin(), c.eta_grid.end(), std::greater<>()), "eta_grid",
          "must be sorted in descending order");
  require(one_of(c.kappa, {"rational", "constant"}), "kappa", "expected rational or constant, got '" + c.kappa + "'");
  require(c.kappa_value > 0, "kappa_value", "must be > 0");
  require(one_of(c.ou_path, {"wiener", "zero", "linear"}), "ou_path",
          "expected wiener, zero or linear, got '" + c.ou_path + "'");
  require(c.ou_paths >= 2, "ou_paths", "must be at least 2");
  require(c.variance_tol > 0, "variance_tol", "must be > 0");
  require(c.mean_tol > 0, "mean_tol", "must be > 0");
  require(c.identity_tol > 0, "identity_tol", "must be > 0");
  require(c.sublinearity_horizon >= 1, "sublinearity_horizon", "must be >= 1");
  require(c.sublinearity_tol > 0, "sublinearity_tol", "must be > 0");
  require(c.scalar_base != 0, "scalar_base", "must be nonzero");
  require(c.scalar_perturbed != 0, "scalar_perturbed", "must be nonzero");
  require(c.saddle_eps >= 0, "saddle_eps", "must be >= 0");
  require(is_square(c.matrix_a.size()), "matrix_a", "needs a square number of entries");
  require(c.matrix_b.size() == c.matrix_a.size(), "matrix_b", "must have as many entries as matrix_a");
  require(c.n_min < 0, "n_min", "must be < 0");
  require(c.n_max > 0, "n_max", "must be > 0");
  require(c.threshold_margin > 0 && c.threshold_margin <= 1, "threshold_margin", "must lie in (0, 1]");
  require(c.verify_slack >= 1, "verify_slack", "must be >= 1");
  require(!c.models.empty(), "models", "must not be empty");
  for (const auto& m : c.models)
    require(one_of(m, {"cubic", "additive"}), "models", "unknown model '" + m + "' (expected cubic or additive)");
  require(c.radius > 0, "radius", "must be > 0");
  require(c.modes >= 1, "modes", "must be >= 1");
  require(c.damping > 0, "damping", "must be > 0");
  require(one_of(c.noise, {"both", "position", "velocity"}), "noise",
          "expected both, position or velocity, got '" + c.noise + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::map<std::string, int> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected key = value, got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const auto& fs = fields();
    auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return f.name == key; });
    if (it == fs.end()) throw ConfigError("line " + std::to_string(line) + ": unknown field '" + key + "'");
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(line) + ": field '" + key + "' already set on line " +
                        std::to_string(seen[key]));
    seen[key] = line;
    try {
      it->set(c, value);
    } catch (const FieldError& e) {
      throw ConfigError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  try {
    validate(c);
  } catch (const FieldError& e) {
    auto it = seen.find(e.field);
    if (it == seen.end()) throw ConfigError(std::string("default ") + e.what());
    throw ConfigError("line " + std::to_string(it->second) + ": " + e.what());
  }
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config(in);
}

std::string to_config_text(const ExperimentConfig& c) {
  std::string s;
  for (const auto& f : fields()) s += f.name + " = " + f.get(c) + "\n";
  return s;
}

}  // namespace rds
