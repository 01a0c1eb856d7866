#include "spinwalk/cli.hpp"

int main(int argc, char** argv) { return spinwalk::cli::run(argc, argv); }
