#include "ocfl/cli_main.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ocfl::cli_main(std::move(args));
}
