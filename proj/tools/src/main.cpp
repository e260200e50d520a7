#include "cli.hpp"

int main(int argc, char** argv) { return extractkit::cli::execute(argc, argv); }
