#include <iostream>

#include "ntkspec/cli.hpp"

int main(int argc, char** argv) {
  return ntkspec::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
