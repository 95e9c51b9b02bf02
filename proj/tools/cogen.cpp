#include "cogen/cli.hpp"

int main(int argc, char** argv) { return cogen::run_command(argc, argv); }
