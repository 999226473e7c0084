#include <iostream>

#include "layersep/cli.hpp"

int main(int argc, char** argv) {
  return layersep::cli::run(argc, argv, std::cout, std::cerr);
}
