#include <iostream>
#include <string>
#include <vector>

#include "nlight/pipeline.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return nlight::run_cli(args, std::cout, std::cerr);
}
