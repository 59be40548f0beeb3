// Writes the device curve tables used as golden files.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "hess/devices/curves.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Regenerate device curve golden tables"};
    std::string dir = "tests/golden";
    app.add_option("--out", dir, "output directory");
    CLI11_PARSE(app, argc, argv);
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : hess::device_golden_tables()) {
        const auto path = std::filesystem::path(dir) / name;
        std::ofstream f(path, std::ios::binary);
        f << text;
        if (!f) {
            std::cerr << "cannot write " << path << '\n';
            return 1;
        }
        std::cout << path.string() << '\n';
    }
    return 0;
}
