#include "curvrec/cli.hpp"

int main(int argc, char** argv) { return curvrec::cli_main(argc, argv); }
