#include "mdporder/cli.hpp"

int main(int argc, char** argv) { return mdporder::cli_main(argc, argv); }
