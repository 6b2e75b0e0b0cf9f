#include <iostream>

#include "hmdcal/cli.hpp"

int main(int argc, char** argv) {
    return hmdcal::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
