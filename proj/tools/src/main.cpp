#include "mfd_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return mfd::cli::run(argc, argv, std::cout, std::cerr);
}
