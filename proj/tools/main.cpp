#include "src/cli.hpp"

int main(int argc, char** argv) { return semigroup::cli::main_entry(argc, argv); }
