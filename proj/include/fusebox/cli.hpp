#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fusebox {

inline constexpr const char* kToolName = "fusebox";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitStatus : int {
  kExitOk = 0,
  kExitInvalid = 1,  // validation or parse error
  kExitIo = 2,
};

// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fusebox
