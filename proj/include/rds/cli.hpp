#ifndef RDS_CLI_HPP
#define RDS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace rds {

// rds {ou-check|robustness|hyperbolic|wave} --config <file> [--out <dir>] [--seed <n>]
// args excludes the program name. Writes <command>.csv (when there is a table),
// <command>.json and the effective <command>.cfg into the output directory.
// Returns 0 on success, 1 on a scientific failure, 2 on a usage or config error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rds

#endif
