#include "flowridge/cli.hpp"

int main(int argc, char** argv) { return flowridge::cli::run(argc, argv); }
