#pragma once

namespace curvrec {

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 on success, 2 on usage errors, 1 on runtime failures.
int cli_main(int argc, const char* const* argv);

}  // namespace curvrec
