#include "spjf/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return spjf::cli::dispatch(std::move(args));
}
