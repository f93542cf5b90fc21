#include "sdcam/cli.hpp"

int main(int argc, char** argv) { return sdcam::cli::main_entry(argc, argv); }
