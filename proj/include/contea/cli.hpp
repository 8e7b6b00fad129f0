#pragma once
#include <string>
#include <vector>

namespace contea {

// Entry point behind the contea binary. Subcommands: gen, train, run, eval,
// export. Returns the process exit code: 0 success, 1 runtime error,
// 2 usage error.
int dispatch(const std::vector<std::string>& args);

} // namespace contea
