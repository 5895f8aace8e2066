#include <lkg/cli.hpp>

int main(int argc, char** argv) { return lkg::cli_run(argc, argv); }
