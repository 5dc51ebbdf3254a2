#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crowd::cli {

// Exit codes
inline constexpr int kOk = 0;
inline constexpr int kDataError = 1;
inline constexpr int kUsageError = 2;

// Runs one command line (args excludes the program name). Artifacts go to the
// requested output files, or to `out` when no output file is given; the
// summary line and errors go to `err` in the latter case.
// Errors are single lines of the form  crowd:error:<Code>:<message>
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string digest_file(const std::string& path);  // fnv1a64 hex of the bytes

}  // namespace crowd::cli
