#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tiox::cli {

// Runs one command line (arguments after the program name). Results go to
// `out` unless --out names a file; diagnostics go to `err`.
// Exit codes: 0 ok, 2 usage/config, 3 parse/schema, 4 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

// Directory searched for lattices.toml, phase_rules.toml and vacancy.toml
// when --config is not given.
inline constexpr const char* kConfigEnv = "TIOX_CONFIG_DIR";

}  // namespace tiox::cli
