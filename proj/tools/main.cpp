#include "cli.hpp"

int main(int argc, char** argv) { return catts::cli::run(argc, argv); }
