#include <iostream>

#include "nnd_app/commands.hpp"

int main(int argc, char** argv) { return nnd::app::run_cli(argc, argv, std::cout, std::cerr); }
