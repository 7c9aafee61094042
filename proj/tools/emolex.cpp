#include "emolex/cli.hpp"

int main(int argc, char** argv) { return emolex::cli::run(argc, argv); }
