#include <iostream>
#include <string>
#include <vector>

#include "procam/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return procam::run_cli(args, std::cout, std::cerr);
}
