#include <iostream>
#include <string>
#include <vector>

#include "lmgnn/cli.hpp"

int main(int argc, char** argv) {
  return lmgnn::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
