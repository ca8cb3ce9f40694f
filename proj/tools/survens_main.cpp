#include "survens/cli.hpp"

int main(int argc, char** argv) { return survens::cli_main(argc, argv); }
