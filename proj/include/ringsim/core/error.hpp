#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ringsim {

enum class ErrorCategory {
  invalid_input,
  geometry,
  numeric,
  singularity,
  accuracy,
  statistics,
  schedule,
  parse,
  io,
};

std::string_view to_string(ErrorCategory c);

/// Single exception type for the library; the category drives CLI exit codes
/// and the `ERROR:<category>:` prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) { throw Error(c, msg); }

inline void require(bool cond, ErrorCategory c, const std::string& msg) {
  if (!cond) fail(c, msg);
}

}  // namespace ringsim
