#include "seal/cli.hpp"

#include <iostream>
#include <unistd.h>

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  seal::cli::Console console{std::cin, std::cout, std::cerr, isatty(STDIN_FILENO) != 0};
  return seal::cli::run_command(args, console);
}
