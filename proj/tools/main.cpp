#include <iostream>
#include <string>
#include <vector>

#include "spherefit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return spherefit::cli::run(args, std::cout, std::cerr);
}
