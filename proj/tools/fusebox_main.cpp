#include <iostream>
#include <string>
#include <vector>

#include "fusebox/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fusebox::run_cli(args, std::cout, std::cerr);
}
