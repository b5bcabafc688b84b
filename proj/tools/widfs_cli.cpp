#include "widfs/cli.hpp"

int main(int argc, char** argv) { return widfs::cli::run(argc, argv); }
