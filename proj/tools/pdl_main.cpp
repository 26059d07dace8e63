#include <unistd.h>

#include <iostream>

#include "pdl/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  std::vector<std::string> args(argv + 1, argv + argc);
  return pdl::cli::run(args, {std::cin, std::cout, std::cerr, isatty(STDOUT_FILENO) == 1});
}
