#include "sturm/cli.hpp"

int main(int argc, char** argv) { return sturm::cli::run_cli(argc, argv); }
