#include <string>
#include <vector>

#include "tedrate/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tedrate::commands::run_cli(args);
}
