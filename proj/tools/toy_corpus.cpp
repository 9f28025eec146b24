// deepfeat-toy-corpus: writes synthetic scored tissue images and a manifest.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "deepfeat/error.hpp"
#include "deepfeat/image_io.hpp"
#include "deepfeat/table_io.hpp"
#include "deepfeat/toy_corpus.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"Synthetic scored tissue images (PGM) with a path,score manifest"};
    int n = 80;
    int size = 64;
    std::uint64_t seed = 7;
    std::string out_dir;
    app.add_option("--n", n, "Number of images")->check(CLI::PositiveNumber);
    app.add_option("--size", size, "Image side in pixels")->check(CLI::Range(16, 4096));
    app.add_option("--seed", seed, "Seed");
    app.add_option("--out-dir", out_dir, "Directory for the images and manifest.csv")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        const auto corpus = deepfeat::toy_corpus(n, size, seed);
        std::string manifest = "path,score\n";
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "img_%04zu.pgm", i);
            deepfeat::write_pgm(fs::path(out_dir) / name, corpus[i].image);
            manifest += std::string(name) + "," + std::to_string(corpus[i].score) + "\n";
        }
        deepfeat::write_file_atomically(fs::path(out_dir) / "manifest.csv", manifest);
        std::cout << corpus.size() << " images -> " << out_dir << "\n";
    } catch (const deepfeat::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
