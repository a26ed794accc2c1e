#include <cstdlib>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  return slipnet::cli::run_cli(argc, argv, std::cout, std::cerr,
                               [](const char* name) { return std::getenv(name); });
}
