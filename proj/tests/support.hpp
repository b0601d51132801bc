#ifndef SPECTRA_TESTS_SUPPORT_HPP
#define SPECTRA_TESTS_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "spectra/grid.hpp"

namespace testsupport {

inline double uniform01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline spectra::ImageGrid random_grid(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    spectra::ImageGrid img(h, w);
    for (double& v : img.data()) v = uniform01(rng);
    return img;
}

inline double max_abs_diff(const spectra::ImageGrid& a, const spectra::ImageGrid& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// Unique scratch directory per test binary run, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        path_ = base / (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testsupport

#endif
