#pragma once

#include <string>
#include <vector>

namespace krgnn {

// Full command-line entry point, callable in-process for tests. Returns the
// process exit code: 0 success, 1 runtime failure (message on stderr),
// 2 usage error.
int run_cli(const std::vector<std::string>& args);

}  // namespace krgnn
