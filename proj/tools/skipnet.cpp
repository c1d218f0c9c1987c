#include "skipnet/cli.hpp"

int main(int argc, char** argv) { return skipnet::cli::run(argc, argv); }
