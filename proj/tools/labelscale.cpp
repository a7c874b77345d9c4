#include <string>
#include <vector>

#include "labelscale/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return labelscale::cli::run(args);
}
