#include "ralab/cli.hpp"

int main(int argc, char** argv) { return ralab::run_cli(argc, argv); }
