#include "ncv/cli.hpp"

int main(int argc, char** argv) { return ncv::cli::run_cli(argc, argv); }
