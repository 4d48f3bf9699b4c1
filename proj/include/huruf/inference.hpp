#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "huruf/model.hpp"

namespace huruf {

struct RankedClass {
    std::size_t index = 0;
    std::string name;
    float probability = 0.0f;
};

struct Prediction {
    std::size_t class_index = 0;
    std::string label;
    std::vector<float> probabilities;
    std::vector<RankedClass> topk;
};

/// Classifies one upright image given as side*side values, row-major. Values
/// are clamped to [0, 1]; a wrong count or a non-finite value throws
/// ParameterError. The shared path behind the CLI and the HTTP service.
Prediction predict_pixels(const Model<float>& model, const std::vector<std::string>& class_names,
                          std::span<const float> pixels, std::size_t topk);

/// The min(k, K) most probable classes, descending, lower index first on ties.
std::vector<RankedClass> top_k(std::span<const float> probs, const std::vector<std::string>& class_names,
                               std::size_t k);

}  // namespace huruf
