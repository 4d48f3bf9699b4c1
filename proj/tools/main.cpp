#include <iostream>
#include <string>
#include <vector>

#include "huruf/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return huruf::run_cli(args, std::cout, std::cerr);
}
