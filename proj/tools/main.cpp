#include <iostream>
#include <string>
#include <vector>

#include "simulst/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return simulst::cli::run(args, std::cout, std::cerr);
}
