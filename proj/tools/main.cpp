#include "fheprotect/cli.hpp"

int main(int argc, char** argv) { return fheprotect::cli::run(argc, argv); }
