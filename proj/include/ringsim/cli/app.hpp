#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ringsim/core/error.hpp"

namespace ringsim {

/// Environment variable naming the default output directory.
inline constexpr const char* output_dir_env = "RINGSIM_OUT";

/// 1 for validation errors, 2 for numeric failures.
int exit_code(ErrorCategory c);

/// Full command line without the program name, e.g. {"characterize", "--out", "dir"}.
/// Reports go to `out`; errors go to `err` as `ERROR:<category>:<message>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ringsim
