#include <string>
#include <vector>

#include "contea/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return contea::dispatch(args);
}
