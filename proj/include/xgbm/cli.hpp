#pragma once

#include <iosfwd>
#include <string>

namespace xgbm {

enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_numerical_failure = 3,
    exit_partial_result = 4,
};

// Entry point of the command-line tool; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Hex SHA-1 of the git blob object holding `content`.
[[nodiscard]] std::string git_blob_hash(const std::string& content);

}  // namespace xgbm
