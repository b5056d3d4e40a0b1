#include "cli.hpp"

int main(int argc, char** argv) { return trackpose::cli::run(argc, argv); }
