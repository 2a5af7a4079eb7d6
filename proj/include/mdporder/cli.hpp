#pragma once

#include <string>
#include <vector>

namespace mdporder {

/// Entry point of the `mdporder` tool: subcommands simulate, estimate, mc and
/// curve. Returns 0 on success, 1 on usage or validation errors and 2 on
/// runtime failures.
int cli_main(int argc, char** argv);
int cli_main(const std::vector<std::string>& args);

} // namespace mdporder
