#include "abreu/cli.hpp"

int main(int argc, char** argv) { return abreu::run_cli(argc, argv); }
