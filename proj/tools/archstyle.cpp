#include "archstyle/cli.hpp"

int main(int argc, char** argv) {
  return archstyle::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
