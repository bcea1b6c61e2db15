#include <iostream>

#include "vexmatch/cli.hpp"

int main(int argc, char **argv) {
  return vexmatch::cli::run(argc, argv, std::cout, std::cerr);
}
