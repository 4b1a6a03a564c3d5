#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace trimlab::tools {

/// Exit status: 0 when every gate passes, 1 on a failed gate or run error,
/// 2 on a configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trimlab::tools
