#include <iostream>
#include <string>
#include <vector>

#include "chargepred/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return chargepred::run_cli(args, std::cout, std::cerr);
}
