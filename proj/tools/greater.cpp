#include "greater/cli.hpp"

int main(int argc, char** argv) { return greater::cli_dispatch(argc, argv); }
