#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return cmdplp::cli::run(argc, argv, std::cout, std::cerr);
}
