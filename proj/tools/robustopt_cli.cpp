#include "robustopt/cli.hpp"

int main(int argc, char** argv) { return robustopt::cli_main(argc, argv); }
