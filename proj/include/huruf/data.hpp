#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "huruf/tensor.hpp"

namespace huruf {

/// Ordered class-name table. Index k is the class with integer label k.
struct LabelMap {
    std::vector<std::string> names;

    std::size_t class_count() const { return names.size(); }

    /// sifr .. tisya
    static LabelMap digits();
    /// alef .. yeh
    static LabelMap letters();
    /// digits() for 10, letters() for 28; ParameterError otherwise.
    static LabelMap for_head(std::size_t class_count);
};

enum class Split { train, test };

struct Dataset {
    Tensor4<float> images;  // (n, side, side, 1), values in [0, 1]
    std::vector<std::size_t> labels;
    LabelMap classes;
    Split split = Split::train;

    std::size_t size() const { return labels.size(); }
    std::size_t side() const { return images.shape().h; }
};

struct CsvOptions {
    /// Side length the samples are delivered at. Smaller square sources are
    /// upscaled by an integral nearest-neighbour factor.
    std::size_t side = 64;
    bool header = false;
    std::function<void(std::string_view)> notice;
};

/// Reads an images CSV (one sample per row, side*side integers in [0, 255])
/// and a labels CSV (one integer per row), fixes orientation, upsamples and
/// rescales by 1/255.
Dataset load_csv_pair(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                      const LabelMap& map, const CsvOptions& options = {}, Split split = Split::train);

/// Converts one raw dataset row (side_src^2 values in [0, 255], as stored in
/// the CSV) into an upright (1, side, side, 1) sample scaled to [0, 1].
Tensor4<float> decode_row(std::span<const float> raw, std::size_t side);

/// Parses one CSV line of integer pixels in [0, 255].
std::vector<float> parse_pixel_row(std::string_view line, std::size_t row_number);

/// Flip then rotate 90 degrees counter-clockwise, i.e. swap rows and columns.
Tensor4<float> orient_fix(const Tensor4<float>& img);

/// Nearest-neighbour upscale of every plane by an integral factor.
Tensor4<float> upsample_nearest(const Tensor4<float>& img, std::size_t factor);

Matrix<float> one_hot(std::span<const std::size_t> labels, std::size_t class_count);

/// Seeded Fisher-Yates permutation of [0, n) for one epoch.
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

struct Batch {
    std::vector<std::size_t> indices;
    Tensor4<float> x;
    Matrix<float> y;
};

/// Copies the given samples into a contiguous batch.
Batch gather(const Dataset& ds, std::vector<std::size_t> indices);

/// Walks one epoch of a dataset in consecutive batches of a seeded
/// permutation. The final batch may be short.
class BatchIterator {
public:
    BatchIterator(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch);

    std::size_t batch_count() const;
    bool done() const { return cursor_ >= order_.size(); }
    Batch next();
    const std::vector<std::size_t>& order() const { return order_; }

private:
    const Dataset* ds_;
    std::size_t batch_size_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

/// Splits off a seeded random `fraction` of ds as a held-out set (at least
/// one sample, and at least one left for training).
std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction, std::uint64_t seed);

/// Subset of ds in the given order.
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace huruf
