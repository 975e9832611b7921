#include "tiox/cli.hpp"

int main(int argc, char** argv) { return tiox::cli::run(argc, argv); }
