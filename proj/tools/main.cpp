#include "cli.hpp"

int main(int argc, char** argv) {
    return dgx::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
