#include <iostream>

#include "sdsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sdsim::run_cli(args, std::cout, std::cerr);
}
