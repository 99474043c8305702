// harcap-fixture: writes a synthetic demo dataset for offline runs.

#include <harcap/synthetic.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Write a synthetic demo dataset (frames, manifest, lexicon, config)"};
    std::string dir;
    harcap::synthetic::DemoOptions opt;
    app.add_option("dir", dir, "Destination directory")->required();
    app.add_option("--frames", opt.frames_per_video, "Frames per video")->check(CLI::PositiveNumber);
    app.add_option("--seed", opt.seed, "Texture seed");
    app.add_flag("--png", opt.png, "Write PNG frames instead of PGM");
    CLI11_PARSE(app, argc, argv);

    try {
        harcap::synthetic::write_demo_dataset(dir, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "wrote demo dataset to " << dir << "\n";
    return 0;
}
