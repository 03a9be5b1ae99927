#include "rds/cli.hpp"

#include "rds/config.hpp"
#include "rds/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace rds {

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + p.string() + "'");
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dichotomy and hyperbolic-solution experiments for random dynamical systems", "rds"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  for (const char* name : {"ou-check", "robustness", "hyperbolic", "wave"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "flat key = value config file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "seed (overrides the config)");
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!cfg.command.empty() && cfg.command != command)
      throw ConfigError("config is for '" + cfg.command + "' but the command is '" + command + "'");
    cfg.command = command;
    if (out_dir) cfg.out = *out_dir;
    if (seed) cfg.seed = *seed;
    validate(cfg);
  } catch (const ConfigError& e) {
    err << "config error in " << config_path << ": " << e.what() << "\n";
    return kExitUsage;
  }

  ExperimentResult res;
  try {
    res = run_experiment(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << command << ": " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return kExitScientific;
  }

  try {
    const std::filesystem::path dir(cfg.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + cfg.out + "': " + ec.message());
    if (!res.csv.empty()) write_file(dir / (command + ".csv"), res.csv);
    write_file(dir / (command + ".json"), res.json);
    write_file(dir / (command + ".cfg"), to_config_text(cfg));
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  for (const auto& line : res.summary) out << line << "\n";
  out << command << ": " << (res.exit_code == kExitOk ? "ok" : "FAILED") << "\n";
  return res.exit_code;
}

}  // namespace rds
