#include <vector>

#include "reqgen/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return reqgen::run_command(std::move(args));
}
