#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "huruf/data.hpp"
#include "huruf/random.hpp"
#include "huruf/tensor.hpp"

namespace huruf::test {

/// Three-or-more-class toy images: one Gaussian bump per class at a fixed
/// anchor, jittered per sample, over faint uniform noise.
inline Dataset make_blobs(std::size_t n, std::size_t side, std::size_t classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.06, 0.06);
    std::uniform_real_distribution<double> noise(0.0, 0.1);
    Dataset ds;
    ds.images = Tensor4<float>(Shape4{n, side, side, 1});
    ds.labels.resize(n);
    for (std::size_t k = 0; k < classes; ++k) ds.classes.names.push_back("blob" + std::to_string(k));
    const double sigma = 0.12 * static_cast<double>(side);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t k = s % classes;
        const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(k) / static_cast<double>(classes);
        const double ci = (0.5 + 0.28 * std::sin(angle) + jitter(rng)) * static_cast<double>(side);
        const double cj = (0.5 + 0.28 * std::cos(angle) + jitter(rng)) * static_cast<double>(side);
        for (std::size_t i = 0; i < side; ++i) {
            for (std::size_t j = 0; j < side; ++j) {
                const double di = static_cast<double>(i) - ci, dj = static_cast<double>(j) - cj;
                const double v = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma)) + noise(rng);
                ds.images(s, i, j, 0) = static_cast<float>(std::min(1.0, v));
            }
        }
        ds.labels[s] = k;
    }
    return ds;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("huruf-" + tag + "-" + std::to_string((static_cast<std::uint64_t>(rd()) << 32) ^ rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace huruf::test
