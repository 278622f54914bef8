#include "owdcl/cli.hpp"

int main(int argc, char** argv) { return owdcl::run_cli(argc, argv); }
