#include "embalign/cli.hpp"

int main(int argc, char** argv) { return embalign::cli_main(argc, argv); }
