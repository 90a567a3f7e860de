#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "dlfuzz/cli/cli.hpp"

int main(int argc, char** argv) {
    dlfuzz::CliContext ctx;
    std::error_code ec;
    auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
    ctx.self_command = ec ? std::string(argv[0]) : self.string();
    std::vector<std::string> args(argv + 1, argv + argc);
    return dlfuzz::run_cli(args, std::cout, std::cerr, ctx);
}
