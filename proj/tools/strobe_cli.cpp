#include <string>
#include <vector>

#include "strobe/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return strobe::cli::run(std::move(args));
}
