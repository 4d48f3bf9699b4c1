#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "huruf/model.hpp"
#include "huruf/training.hpp"

namespace huruf {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kBlobFile = "weights.bin";

struct TensorEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;  // in values, not bytes
    std::size_t count = 0;
    bool trainable = true;
};

struct ModelManifest {
    int format_version = kFormatVersion;
    std::string kind;  // "digits", "letters" or "custom"
    std::size_t input_side = 0;
    std::vector<std::string> class_names;
    nlohmann::json layers;
    std::vector<TensorEntry> tensors;
    std::size_t stored_value_count = 0;
    std::size_t trainable_parameter_count = 0;
    std::optional<TrainConfig> training;
    std::string digest;  // lowercase hex SHA-256 of the blob
    std::size_t blob_bytes = 0;
};

struct SaveMeta {
    std::vector<std::string> class_names;
    std::optional<TrainConfig> training;
};

struct StoredModel {
    ParameterSet<float> params;
    ModelSpec spec;
    ModelManifest manifest;
};

std::string model_kind(std::size_t num_classes);

/// Manifest describing params/spec, with the digest of their blob.
ModelManifest make_manifest(const ParameterSet<float>& params, const ModelSpec& spec, const SaveMeta& meta);
nlohmann::json manifest_to_json(const ModelManifest& m);
ModelManifest manifest_from_json(const nlohmann::json& j);

/// Every stored tensor as 32-bit little-endian floats in manifest order.
std::vector<std::uint8_t> encode_blob(const ParameterSet<float>& params);

std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Writes <dir>/manifest.json and <dir>/weights.bin, each through a temporary
/// file and rename.
void save_model(const ParameterSet<float>& params, const ModelSpec& spec, const SaveMeta& meta,
                const std::filesystem::path& dir);

/// Reads and validates a model directory: version, shape chain, blob length
/// and digest.
StoredModel load_model(const std::filesystem::path& dir);

}  // namespace huruf
