#include "rjd/cli.hpp"

int main(int argc, char** argv) { return rjd::run_cli(argc, argv); }
