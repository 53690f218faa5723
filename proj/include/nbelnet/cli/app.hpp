#pragma once

#include <iosfwd>

#include <nlohmann/json.hpp>

namespace nbelnet::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitNotConverged = 2,
  kExitInapplicable = 3,
};

/// Every configuration key with its default value.
nlohmann::json default_config();

/// Entry point of the nbelnet tool. Results go to --out (or `out`), logs and
/// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nbelnet::cli
