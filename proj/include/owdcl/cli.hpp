#pragma once

#include <string>
#include <vector>

namespace owdcl {

// Full command-line entry point (subcommands generate/pretrain/adapt/eval).
// Returns the process exit code; errors are reported on stderr as
// `error[<code>]: <message>`.
int run_cli(int argc, char** argv);

// Convenience overload for driving the CLI in-process; args excludes argv[0].
int run_cli(const std::vector<std::string>& args);

}  // namespace owdcl
