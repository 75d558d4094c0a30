#include "condense/cli.hpp"

int main(int argc, char** argv) { return condense::cli::run(argc, argv); }
