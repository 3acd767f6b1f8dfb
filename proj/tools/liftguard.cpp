#include <iostream>
#include <string>
#include <vector>

#include "liftguard/cli.hpp"

int main(int argc, char** argv) {
    return liftguard::cli::run(std::vector<std::string>(argv, argv + argc), std::cout);
}
