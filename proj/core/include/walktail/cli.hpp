#pragma once

#include <string>
#include <vector>

namespace walktail {

// Exit codes: 0 success, 2 config error, 3 numeric/calibration/sampler
// failure, 4 validation failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace walktail
