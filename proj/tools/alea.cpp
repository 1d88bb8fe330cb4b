#include <iostream>

#include "alea/cli.hpp"

int main(int argc, char** argv) {
  return alea::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
