#include "palletbench/cli.hpp"

int main(int argc, char** argv) { return palletbench::cli::run(argc, argv); }
