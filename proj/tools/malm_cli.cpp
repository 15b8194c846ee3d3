#include <iostream>
#include <string>
#include <vector>

#include "malm/bench.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return malm::cli_main(args, std::cout, std::cerr);
}
