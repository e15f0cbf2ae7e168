#include "gaitscore/commands.hpp"

int main(int argc, char** argv) { return gaitscore::run_cli(argc, argv); }
