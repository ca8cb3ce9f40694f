#pragma once

namespace survens {

// Entry point for the survens tool. Returns the process exit code:
// 0 success, 1 usage or configuration error, 2 runtime failure.
int cli_main(int argc, char** argv);

}  // namespace survens
