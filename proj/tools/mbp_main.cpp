#include "mbp/scenario.hpp"

int main(int argc, char** argv) { return mbp::cli_main(argc, argv); }
