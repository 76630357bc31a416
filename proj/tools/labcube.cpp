#include <iostream>
#include <string>
#include <vector>

#include "labcube/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return labcube::run_cli(args, std::cout, std::cerr, labcube::process_environment());
}
