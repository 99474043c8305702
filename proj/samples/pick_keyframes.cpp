// Prints the keyframes chosen from a directory of PGM/PNG frames.
//
//   pick_keyframes <frames-dir> [k] [seed]

#include <harcap/image_io.hpp>
#include <harcap/keyframe.hpp>

#include <cstdio>
#include <cstdlib>

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <frames-dir> [k] [seed]\n", argv[0]);
        return 2;
    }
    std::size_t k = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 2;
    harcap::KeyframeConfig cfg;
    cfg.seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 0;
    try {
        auto files = harcap::list_frame_files(argv[1]);
        auto frames = harcap::load_frames(files);
        auto scores = harcap::score_frames(frames);
        for (auto i : harcap::select_keyframes(frames, k, cfg)) {
            std::printf("%s  brightness %.1f  entropy %.3f\n", files[i].filename().c_str(), scores[i].brightness,
                        scores[i].entropy);
        }
    } catch (const harcap::Error& e) {
        std::fprintf(stderr, "%s: %s\n", e.kind().c_str(), e.what());
        return 1;
    }
    return 0;
}
