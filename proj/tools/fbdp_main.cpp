#include "fbdp/cli.hpp"

int main(int argc, char** argv) {
    return fbdp::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
