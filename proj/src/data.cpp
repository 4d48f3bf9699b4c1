#include "huruf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "huruf/random.hpp"

namespace huruf {

LabelMap LabelMap::digits() {
    return LabelMap{{"sifr", "wahid", "ithnan", "thalaatha", "arbiya", "khamsa", "sitta", "sabya", "thamaniiya",
                     "tisya"}};
}

LabelMap LabelMap::letters() {
    return LabelMap{{"alef", "beh", "teh", "theh", "jeem", "hah", "khah", "dal", "thal", "reh",
                     "zain", "seen", "sheen", "sad", "dad", "tah", "zah", "ain", "ghain", "feh",
                     "qaf", "kaf", "lam", "meem", "noon", "heh", "waw", "yeh"}};
}

LabelMap LabelMap::for_head(std::size_t class_count) {
    if (class_count == 10) return digits();
    if (class_count == 28) return letters();
    throw ParameterError("head must be 10 (digits) or 28 (letters), got " + std::to_string(class_count));
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path, bool header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    bool skipped = !header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!skipped) {
            skipped = true;
            continue;
        }
        lines.push_back(std::move(line));
    }
    // tolerate trailing blank lines only
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

long parse_int(std::string_view field, std::size_t row, const char* what) {
    field = trim(field);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw FormatError(std::string(what) + " row " + std::to_string(row) + ": '" + std::string(field) +
                          "' is not an integer");
    }
    return v;
}

std::size_t exact_sqrt(std::size_t n) {
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : 0;
}

}  // namespace

std::vector<float> parse_pixel_row(std::string_view line, std::size_t row_number) {
    std::vector<float> px;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const std::string_view field =
            line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const long v = parse_int(field, row_number, "images");
        if (v < 0 || v > 255) {
            throw FormatError("images row " + std::to_string(row_number) + ": pixel " + std::to_string(v) +
                              " outside [0, 255]");
        }
        px.push_back(static_cast<float>(v));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return px;
}

Tensor4<float> orient_fix(const Tensor4<float>& img) {
    if (img.shape().h != img.shape().w) {
        throw ShapeError("orientation fix needs square images, got " + img.shape().str());
    }
    return transpose_hw(img);
}

Tensor4<float> upsample_nearest(const Tensor4<float>& img, std::size_t factor) {
    if (factor == 0) throw ParameterError("upsampling factor must be positive");
    if (factor == 1) return img;
    const Shape4 s = img.shape();
    Tensor4<float> out(Shape4{s.n, s.h * factor, s.w * factor, s.c});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t i = 0; i < s.h * factor; ++i)
            for (std::size_t j = 0; j < s.w * factor; ++j)
                for (std::size_t c = 0; c < s.c; ++c) out(n, i, j, c) = img(n, i / factor, j / factor, c);
    return out;
}

Tensor4<float> decode_row(std::span<const float> raw, std::size_t side) {
    const std::size_t src = exact_sqrt(raw.size());
    if (src == 0) {
        throw FormatError("row of " + std::to_string(raw.size()) + " pixels is not a square image");
    }
    if (side % src != 0) {
        throw FormatError("source side " + std::to_string(src) + " does not divide model side " +
                          std::to_string(side));
    }
    Tensor4<float> img(Shape4{1, src, src, 1}, std::vector<float>(raw.begin(), raw.end()));
    return scale(upsample_nearest(orient_fix(img), side / src), 1.0f / 255.0f);
}

Dataset load_csv_pair(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                      const LabelMap& map, const CsvOptions& options, Split split) {
    const std::vector<std::string> image_lines = read_lines(images_path, options.header);
    const std::vector<std::string> label_lines = read_lines(labels_path, options.header);
    if (image_lines.size() != label_lines.size()) {
        throw PairingError(images_path.string() + " has " + std::to_string(image_lines.size()) + " rows but " +
                           labels_path.string() + " has " + std::to_string(label_lines.size()));
    }
    if (image_lines.empty()) throw FormatError(images_path.string() + " contains no samples");

    const std::size_t row_offset = options.header ? 2 : 1;
    const std::size_t n = image_lines.size();
    const std::size_t side = options.side;

    std::size_t src_side = 0;
    Dataset ds;
    ds.classes = map;
    ds.split = split;
    ds.images = Tensor4<float>(Shape4{n, side, side, 1});
    for (std::size_t r = 0; r < n; ++r) {
        const std::vector<float> px = parse_pixel_row(image_lines[r], r + row_offset);
        if (r == 0) {
            src_side = exact_sqrt(px.size());
            if (src_side == 0) {
                throw FormatError("images row " + std::to_string(row_offset) + ": " + std::to_string(px.size()) +
                                  " fields is not a square pixel count");
            }
            if (side % src_side != 0) {
                throw FormatError("source images are " + std::to_string(src_side) + "x" +
                                  std::to_string(src_side) + ", which does not scale integrally to " +
                                  std::to_string(side));
            }
        } else if (px.size() != src_side * src_side) {
            throw FormatError("images row " + std::to_string(r + row_offset) + ": expected " +
                              std::to_string(src_side * src_side) + " fields, got " + std::to_string(px.size()));
        }
        const Tensor4<float> img = decode_row(px, side);
        std::copy(img.values().begin(), img.values().end(), ds.images.sample(r).begin());
    }

    std::vector<long> raw_labels(n);
    for (std::size_t r = 0; r < n; ++r) raw_labels[r] = parse_int(label_lines[r], r + row_offset, "labels");
    const auto [lo, hi] = std::minmax_element(raw_labels.begin(), raw_labels.end());
    const auto k = static_cast<long>(map.class_count());
    long shift = 0;
    if (*lo == 1 && *hi == k) {
        shift = 1;
        if (options.notice) options.notice("labels in " + labels_path.string() + " look 1-indexed; shifting down by 1");
    }
    ds.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const long v = raw_labels[r] - shift;
        if (v < 0 || v >= k) {
            throw LabelError("labels row " + std::to_string(r + row_offset) + ": label " +
                             std::to_string(raw_labels[r]) + " outside [0, " + std::to_string(k) + ")");
        }
        ds.labels[r] = static_cast<std::size_t>(v);
    }
    return ds;
}

Matrix<float> one_hot(std::span<const std::size_t> labels, std::size_t class_count) {
    Matrix<float> m(labels.size(), class_count);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] >= class_count) {
            throw LabelError("label " + std::to_string(labels[r]) + " outside [0, " + std::to_string(class_count) +
                             ")");
        }
        m(r, labels[r]) = 1.0f;
    }
    return m;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(seed, {epoch}));
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
    }
    return order;
}

Batch gather(const Dataset& ds, std::vector<std::size_t> indices) {
    const Shape4 s = ds.images.shape();
    Batch b;
    b.x = Tensor4<float>(Shape4{indices.size(), s.h, s.w, s.c});
    std::vector<std::size_t> labels(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto src = ds.images.sample(indices[k]);
        std::copy(src.begin(), src.end(), b.x.sample(k).begin());
        labels[k] = ds.labels[indices[k]];
    }
    b.y = one_hot(labels, ds.classes.class_count());
    b.indices = std::move(indices);
    return b;
}

BatchIterator::BatchIterator(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch)
    : ds_(&ds), batch_size_(batch_size), order_(epoch_permutation(ds.size(), seed, epoch)) {
    if (batch_size == 0) throw ParameterError("batch size must be at least 1");
}

std::size_t BatchIterator::batch_count() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

Batch BatchIterator::next() {
    if (done()) throw StateError("batch iterator exhausted");
    const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
    std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
    cursor_ = end;
    return gather(*ds_, std::move(idx));
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ParameterError("subset must contain at least one sample");
    Batch b = gather(ds, std::vector<std::size_t>(indices.begin(), indices.end()));
    Dataset out;
    out.images = std::move(b.x);
    out.classes = ds.classes;
    out.split = ds.split;
    for (std::size_t i : indices) out.labels.push_back(ds.labels[i]);
    return out;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("held-out fraction must lie in (0, 1)");
    if (ds.size() < 2) throw ParameterError("need at least two samples to hold one out");
    const std::vector<std::size_t> order = epoch_permutation(ds.size(), derive_seed(seed, {0x401d}), 0);
    auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
    held = std::clamp<std::size_t>(held, 1, ds.size() - 1);
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return {subset(ds, train), subset(ds, val)};
}

}  // namespace huruf
