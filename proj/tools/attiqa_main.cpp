#include <iostream>

#include "attiqa/cli.hpp"

int main(int argc, char** argv) {
  return attiqa::cli::dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
