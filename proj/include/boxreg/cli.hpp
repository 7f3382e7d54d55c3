// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. JSON goes to `out`, diagnostics to `err`.
// Exit codes: 0 success, 1 runtime or verification failure, 2 usage error.

#ifndef BOXREG_CLI_HPP_
#define BOXREG_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace boxreg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name, e.g. {"metric", "--kind", "iou", ...}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs a simulation config (see README for the schema) and writes one CSV
/// per (family, kind) plus summary.json into `out_dir`. Returns the summary.
/// Throws SchemaError for config problems and IoFailure for write errors.
nlohmann::json run_simulation_config(const nlohmann::json& config, const std::string& out_dir);

}  // namespace boxreg

#endif  // BOXREG_CLI_HPP_
