#pragma once

#include <harcap/dataset.hpp>

#include <atomic>
#include <random>
#include <string>
#include <unistd.h>

namespace testing_support {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("harcap-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

/// Relative path -> contents for every regular file under `root`, skipping
/// names in `skip`.
inline std::map<std::string, std::string> snapshot_tree(const fs::path& root,
                                                        const std::set<std::string>& skip = {}) {
    std::map<std::string, std::string> out;
    if (!fs::exists(root)) return out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        if (skip.count(e.path().filename().string())) continue;
        out[fs::relative(e.path(), root).string()] = harcap::read_file(e.path());
    }
    return out;
}

inline std::string random_word(std::mt19937_64& rng, std::size_t min_len = 3, std::size_t max_len = 8) {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<int> ch('a', 'z');
    std::string w(len(rng), 'a');
    for (auto& c : w) c = static_cast<char>(ch(rng));
    return w;
}

inline std::string random_sentence(std::mt19937_64& rng, std::size_t min_words = 1,
                                   std::size_t max_words = 10) {
    std::uniform_int_distribution<std::size_t> n(min_words, max_words);
    std::string s;
    for (std::size_t i = 0, k = n(rng); i < k; ++i) {
        if (i) s += ' ';
        s += random_word(rng);
    }
    return s;
}

}  // namespace testing_support
