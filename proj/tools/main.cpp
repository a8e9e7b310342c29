#include <string>
#include <vector>

#include "krgnn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return krgnn::run_cli(args);
}
