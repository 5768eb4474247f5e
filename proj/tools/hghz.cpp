#include "hghz/cli.hpp"

int main(int argc, char** argv) { return hghz::cli::run(argc, argv); }
