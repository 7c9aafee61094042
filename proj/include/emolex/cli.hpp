#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace emolex::cli {

/// Runs one `emolex` invocation. Returns 0 on success, 1 when a stage fails
/// and 2 for usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace emolex::cli
