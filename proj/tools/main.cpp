#include <iostream>
#include <string>
#include <vector>

#include "tmsv/cli.hpp"

int main(int argc, char** argv)
{
  return tmsv::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
