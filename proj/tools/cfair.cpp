#include <iostream>

#include "cfair/cli.hpp"

int main(int argc, char** argv) {
  return cfair::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
