#include "iqakit/cli.hpp"

int main(int argc, char** argv) { return iqakit::cli::run(argc, argv); }
