#include "tcqs/cli.hpp"

int main(int argc, char** argv) { return tcqs::cli::run(argc, argv); }
