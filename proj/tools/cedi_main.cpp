#include "cedi/cli.hpp"

int main(int argc, char** argv) {
  return cedi::cli::run_cli(argc, argv);
}
