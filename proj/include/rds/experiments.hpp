#ifndef RDS_EXPERIMENTS_HPP
#define RDS_EXPERIMENTS_HPP

#include "rds/config.hpp"

#include <string>
#include <vector>

namespace rds {

// Exit codes shared by the experiments and the command line.
inline constexpr int kExitOk = 0;
inline constexpr int kExitScientific = 1;
inline constexpr int kExitUsage = 2;

struct ExperimentResult {
  int exit_code = kExitOk;
  std::string csv;   // empty when the command has no table
  std::string json;  // fixed key order, ends with a newline
  std::vector<std::string> summary;
};

ExperimentResult run_ou_check(const ExperimentConfig& c);
ExperimentResult run_robustness(const ExperimentConfig& c);
ExperimentResult run_hyperbolic(const ExperimentConfig& c);
ExperimentResult run_wave(const ExperimentConfig& c);
// Dispatch on c.command.
ExperimentResult run_experiment(const ExperimentConfig& c);

// %.17g; nan and inf spelled out.
std::string format_double(double x);

}  // namespace rds

#endif
