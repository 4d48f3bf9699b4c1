#include "huruf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace huruf {

std::vector<RankedClass> top_k(std::span<const float> probs, const std::vector<std::string>& class_names,
                               std::size_t k) {
    std::vector<std::size_t> order(probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    order.resize(std::min(k, order.size()));
    std::vector<RankedClass> out;
    for (std::size_t i : order) {
        out.push_back({i, i < class_names.size() ? class_names[i] : std::to_string(i), probs[i]});
    }
    return out;
}

Prediction predict_pixels(const Model<float>& model, const std::vector<std::string>& class_names,
                          std::span<const float> pixels, std::size_t topk) {
    const ModelSpec& spec = model.spec();
    const std::size_t expected = spec.input_side * spec.input_side * spec.in_channels;
    if (pixels.size() != expected) {
        throw ParameterError("expected " + std::to_string(expected) + " pixels, got " + std::to_string(pixels.size()));
    }
    std::vector<float> clamped(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        if (!std::isfinite(pixels[i])) throw ParameterError("pixel " + std::to_string(i) + " is not a finite number");
        clamped[i] = std::clamp(pixels[i], 0.0f, 1.0f);
    }
    const Tensor4<float> x(Shape4{1, spec.input_side, spec.input_side, spec.in_channels}, std::move(clamped));
    const Matrix<float> probs = model.predict(x);

    Prediction p;
    p.probabilities.assign(probs.row(0).begin(), probs.row(0).end());
    p.class_index = argmax<float>(p.probabilities);
    p.label = p.class_index < class_names.size() ? class_names[p.class_index] : std::to_string(p.class_index);
    p.topk = top_k(p.probabilities, class_names, topk);
    return p;
}

}  // namespace huruf
