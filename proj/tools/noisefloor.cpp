#include "noisefloor/cli.hpp"

int main(int argc, char** argv) { return noisefloor::run_cli(argc, argv); }
