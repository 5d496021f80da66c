#include <iostream>

#include "geodetect/cli.hpp"

int main(int argc, char** argv) {
  return geodetect::dispatch(argc, argv, std::cout, std::cerr);
}
