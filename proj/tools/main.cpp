#include "cli.hpp"

int main(int argc, char** argv) { return vquant::cli::run(argc, argv); }
