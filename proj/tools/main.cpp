#include <iostream>
#include <string>
#include <vector>

#include "ssmlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ssmlab::cli::run(args, std::cout, std::cerr);
}
