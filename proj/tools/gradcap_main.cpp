#include <iostream>

#include "gradcap/cli.hpp"

int main(int argc, char** argv) {
    return gradcap::cli::run_main(argc, argv, std::cout, std::cerr);
}
