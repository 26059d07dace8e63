#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pdl::cli {

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  /// Wrap model output in ANSI green.
  bool color = false;
};

/// Runs one command line (without the program name) and returns the exit
/// code: 0 success, 1 evaluation or I/O error, 2 invalid program or usage.
int run(const std::vector<std::string>& args, Streams io);

}  // namespace pdl::cli
