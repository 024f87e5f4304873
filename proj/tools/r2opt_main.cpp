#include "r2opt/harness.hpp"

int main(int argc, char** argv) { return r2opt::run_cli(argc, argv); }
