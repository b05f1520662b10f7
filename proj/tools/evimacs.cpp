#include "evimacs/cli.hpp"

int main(int argc, char** argv) { return evimacs::cli::main_entry(argc, argv); }
