// main.cpp — tlsspec command-line entry point

#include <iostream>

#include "tlsspec/cli.hpp"

int main(int argc, char** argv) { return tlsspec::dispatch(argc, argv, std::cout, std::cerr); }
