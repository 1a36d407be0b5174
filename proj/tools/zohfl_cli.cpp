#include "zohfl/cli.hpp"

int main(int argc, char** argv) { return zohfl::cli_main(argc, argv); }
