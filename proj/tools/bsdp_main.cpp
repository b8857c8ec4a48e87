#include "bsdp/cli.hpp"

int main(int argc, char** argv) { return bsdp::cli::run(argc, argv); }
