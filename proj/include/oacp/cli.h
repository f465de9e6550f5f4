// Command-line front end: generate, train, run, opt, evaluate, report.

#ifndef OACP_CLI_H_
#define OACP_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace oacp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// args excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace oacp

#endif  // OACP_CLI_H_
