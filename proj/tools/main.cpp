#include <iostream>

#include "geoagg/cli.hpp"

int main(int argc, char** argv) {
  return geoagg::cli::run(argc, argv, std::cout, std::cerr);
}
