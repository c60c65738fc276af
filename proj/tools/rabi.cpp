// rabi.cpp - command-line entry point; see `rabi --help`
#include "rabi/cli.hpp"

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
    rabi::cli::RunConfig config;
    try {
        config = rabi::cli::parse_config(argc, argv);
    } catch (const rabi::cli::InfoRequested& info) {
        std::cout << info.text;
        return 0;
    } catch (const rabi::cli::UsageError& e) {
        std::cerr << "rabi: " << e.what() << "\nRun with --help for more information.\n";
        return 1;
    }
    try {
        return rabi::cli::run(config, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "rabi: " << e.what() << '\n';
        return 1;
    }
}
