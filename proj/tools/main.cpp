#include <iostream>
#include <string>
#include <vector>

#include "clerc/pipeline.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return clerc::run_cli(args, std::cout, std::cerr);
}
