#include "catembed/cli.hpp"

int main(int argc, char** argv) { return catembed::cli::run(argc, argv); }
