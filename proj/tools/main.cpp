#include <iostream>

#include "drekf/cli.hpp"

int main(int argc, char** argv) {
    return drekf::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
