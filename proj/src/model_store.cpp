#include "huruf/model_store.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

namespace huruf {

namespace fs = std::filesystem;

std::string model_kind(std::size_t num_classes) {
    if (num_classes == 10) return "digits";
    if (num_classes == 28) return "letters";
    return "custom";
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw StorageError("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

std::vector<std::uint8_t> encode_blob(const ParameterSet<float>& params) {
    std::vector<std::uint8_t> out;
    out.reserve(4 * params.value_count());
    for (const auto& v : params.views())
        for (float x : v.values) {
            const auto bits = std::bit_cast<std::uint32_t>(x);
            for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
        }
    return out;
}

namespace {

nlohmann::json shape_json(const Shape4& s) { return nlohmann::json::array({s.h, s.w, s.c}); }

nlohmann::json describe_layers(const ModelSpec& spec) {
    const std::vector<LayerShape> chain = shape_chain(spec);
    nlohmann::json layers = nlohmann::json::array();
    std::size_t in = spec.in_channels;
    std::size_t li = 0;
    for (std::size_t b = 0; b < spec.filters.size(); ++b) {
        const std::size_t f = spec.filters[b];
        layers.push_back({{"name", chain[li].name},
                          {"type", "conv2d"},
                          {"filters", f},
                          {"kernel_shape", {f, 3, 3, in}},
                          {"padding", "same"},
                          {"stride", 1},
                          {"activation", to_string(spec.activation)},
                          {"output_shape", shape_json(chain[li].shape)}});
        ++li;
        layers.push_back({{"name", chain[li].name},
                          {"type", "batchnorm"},
                          {"momentum", spec.bn_momentum},
                          {"epsilon", spec.bn_epsilon},
                          {"output_shape", shape_json(chain[li].shape)}});
        ++li;
        layers.push_back({{"name", chain[li].name},
                          {"type", "maxpool"},
                          {"pool", 2},
                          {"stride", 2},
                          {"output_shape", shape_json(chain[li].shape)}});
        ++li;
        layers.push_back({{"name", chain[li].name},
                          {"type", "dropout"},
                          {"rate", spec.dropout_rate},
                          {"output_shape", shape_json(chain[li].shape)}});
        ++li;
        in = f;
    }
    layers.push_back({{"name", chain[li].name}, {"type", "global_avg_pool"}, {"output_shape", shape_json(chain[li].shape)}});
    ++li;
    layers.push_back({{"name", chain[li].name},
                      {"type", "dense"},
                      {"units", spec.num_classes},
                      {"activation", "softmax"},
                      {"output_shape", shape_json(chain[li].shape)}});
    return layers;
}

// Rebuilds the spec from the declared layers and checks the declared output
// shapes against a fresh shape-chain walk.
ModelSpec spec_from_manifest(const ModelManifest& m) {
    ModelSpec spec;
    spec.input_side = m.input_side;
    spec.filters.clear();
    bool have_head = false;
    for (const auto& layer : m.layers) {
        const std::string type = layer.at("type").get<std::string>();
        if (type == "conv2d") {
            spec.filters.push_back(layer.at("filters").get<std::size_t>());
            spec.activation = parse_activation(layer.at("activation").get<std::string>());
            if (spec.filters.size() == 1) spec.in_channels = layer.at("kernel_shape").at(3).get<std::size_t>();
        } else if (type == "batchnorm") {
            spec.bn_momentum = layer.at("momentum").get<double>();
            spec.bn_epsilon = layer.at("epsilon").get<double>();
        } else if (type == "dropout") {
            spec.dropout_rate = layer.at("rate").get<double>();
        } else if (type == "dense") {
            spec.num_classes = layer.at("units").get<std::size_t>();
            have_head = true;
        } else if (type != "maxpool" && type != "global_avg_pool") {
            throw ConsistencyError("manifest declares unknown layer type '" + type + "'");
        }
    }
    if (!have_head) throw ConsistencyError("manifest declares no dense head");

    const std::vector<LayerShape> chain = shape_chain(spec);
    if (chain.size() != m.layers.size()) throw ConsistencyError("manifest layer list does not match the shape chain");
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (m.layers[i].at("output_shape") != shape_json(chain[i].shape)) {
            throw ConsistencyError("manifest layer " + chain[i].name + " declares output " +
                                   m.layers[i].at("output_shape").dump() + ", shape chain gives " +
                                   shape_json(chain[i].shape).dump());
        }
    }
    if (m.class_names.size() != spec.num_classes) {
        throw ConsistencyError("manifest lists " + std::to_string(m.class_names.size()) + " class names for a " +
                               std::to_string(spec.num_classes) + "-way head");
    }
    return spec;
}

void write_atomic(const fs::path& path, const void* data, std::size_t size) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        out.flush();
        if (!out) throw StorageError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw StorageError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

ModelManifest make_manifest(const ParameterSet<float>& params, const ModelSpec& spec, const SaveMeta& meta) {
    try {
        check_parameters(spec, params);
    } catch (const ShapeError& e) {
        throw ConsistencyError(std::string("parameters do not match the model: ") + e.what());
    }
    ModelManifest m;
    m.kind = model_kind(spec.num_classes);
    m.input_side = spec.input_side;
    m.class_names = meta.class_names;
    if (m.class_names.empty())
        for (std::size_t c = 0; c < spec.num_classes; ++c) m.class_names.push_back(std::to_string(c));
    if (m.class_names.size() != spec.num_classes) {
        throw ConsistencyError("got " + std::to_string(m.class_names.size()) + " class names for a " +
                               std::to_string(spec.num_classes) + "-way head");
    }
    m.layers = describe_layers(spec);
    std::size_t offset = 0;
    for (const auto& v : params.views()) {
        m.tensors.push_back({v.name, v.shape, offset, v.values.size(), v.trainable});
        offset += v.values.size();
    }
    m.stored_value_count = offset;
    m.trainable_parameter_count = params.trainable_count();
    m.training = meta.training;
    const std::vector<std::uint8_t> blob = encode_blob(params);
    m.blob_bytes = blob.size();
    m.digest = sha256_hex(blob);
    return m;
}

nlohmann::json manifest_to_json(const ModelManifest& m) {
    nlohmann::json j;
    j["format_version"] = m.format_version;
    j["kind"] = m.kind;
    j["input_side"] = m.input_side;
    j["class_names"] = m.class_names;
    j["block_order"] = {"conv", "activation", "batchnorm", "maxpool", "dropout"};
    j["layers"] = m.layers;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : m.tensors) {
        tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", t.offset}, {"count", t.count},
                           {"trainable", t.trainable}});
    }
    j["tensors"] = std::move(tensors);
    j["stored_value_count"] = m.stored_value_count;
    j["trainable_parameter_count"] = m.trainable_parameter_count;
    if (m.training) {
        const TrainConfig& c = *m.training;
        j["training"] = {{"optimizer", to_string(c.optimizer)},
                         {"initializer", to_string(c.initializer)},
                         {"activation", to_string(c.activation)},
                         {"epochs", c.epochs},
                         {"batch_size", c.batch_size},
                         {"learning_rate", c.learning_rate},
                         {"seed", c.seed}};
    }
    j["blob"] = {{"file", kBlobFile}, {"encoding", "float32-le"}, {"bytes", m.blob_bytes}, {"sha256", m.digest}};
    return j;
}

ModelManifest manifest_from_json(const nlohmann::json& j) {
    ModelManifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != kFormatVersion) {
            throw VersionError("unsupported model format_version " + std::to_string(m.format_version) +
                               " (this build reads version " + std::to_string(kFormatVersion) + ")");
        }
        m.kind = j.at("kind").get<std::string>();
        m.input_side = j.at("input_side").get<std::size_t>();
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        m.layers = j.at("layers");
        for (const auto& t : j.at("tensors")) {
            m.tensors.push_back({t.at("name").get<std::string>(), t.at("shape").get<std::vector<std::size_t>>(),
                                 t.at("offset").get<std::size_t>(), t.at("count").get<std::size_t>(),
                                 t.at("trainable").get<bool>()});
        }
        m.stored_value_count = j.at("stored_value_count").get<std::size_t>();
        m.trainable_parameter_count = j.at("trainable_parameter_count").get<std::size_t>();
        if (j.contains("training")) {
            const auto& t = j.at("training");
            TrainConfig c;
            c.optimizer = parse_optimizer(t.at("optimizer").get<std::string>());
            c.initializer = parse_initializer(t.at("initializer").get<std::string>());
            c.activation = parse_activation(t.at("activation").get<std::string>());
            c.epochs = t.at("epochs").get<std::size_t>();
            c.batch_size = t.at("batch_size").get<std::size_t>();
            c.learning_rate = t.at("learning_rate").get<double>();
            c.seed = t.at("seed").get<std::uint64_t>();
            m.training = c;
        }
        const auto& blob = j.at("blob");
        m.blob_bytes = blob.at("bytes").get<std::size_t>();
        m.digest = blob.at("sha256").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConsistencyError(std::string("malformed manifest: ") + e.what());
    }
    return m;
}

void save_model(const ParameterSet<float>& params, const ModelSpec& spec, const SaveMeta& meta,
                const fs::path& dir) {
    const ModelManifest m = make_manifest(params, spec, meta);
    const std::vector<std::uint8_t> blob = encode_blob(params);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StorageError("cannot create " + dir.string() + ": " + ec.message());
    write_atomic(dir / kBlobFile, blob.data(), blob.size());
    const std::string text = manifest_to_json(m).dump(2) + "\n";
    write_atomic(dir / kManifestFile, text.data(), text.size());
}

StoredModel load_model(const fs::path& dir) {
    const std::vector<std::uint8_t> manifest_bytes = read_file(dir / kManifestFile);
    const nlohmann::json j = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end(), nullptr, false);
    if (j.is_discarded()) throw ConsistencyError((dir / kManifestFile).string() + " is not valid JSON");

    StoredModel out;
    out.manifest = manifest_from_json(j);
    const ModelManifest& m = out.manifest;
    try {
        out.spec = spec_from_manifest(m);
    } catch (const ShapeError& e) {
        throw ConsistencyError(std::string("manifest shape chain is invalid: ") + e.what());
    }

    out.params = make_parameters<float>(out.spec);
    auto views = out.params.views();
    if (views.size() != m.tensors.size()) throw ConsistencyError("manifest tensor list does not match the model");
    std::size_t offset = 0;
    for (std::size_t i = 0; i < views.size(); ++i) {
        const TensorEntry& t = m.tensors[i];
        if (t.name != views[i].name || t.shape != views[i].shape || t.count != views[i].values.size() ||
            t.offset != offset) {
            throw ConsistencyError("manifest tensor " + t.name + " does not match the model layout");
        }
        offset += t.count;
    }
    if (offset != m.stored_value_count) throw ConsistencyError("manifest value count does not add up");

    const std::vector<std::uint8_t> blob = read_file(dir / kBlobFile);
    if (blob.size() != 4 * m.stored_value_count || blob.size() != m.blob_bytes) {
        throw ConsistencyError("weight blob length " + std::to_string(blob.size()) + " bytes, expected " +
                               std::to_string(4 * m.stored_value_count));
    }
    if (sha256_hex(blob) != m.digest) throw ConsistencyError("weight blob digest does not match the manifest");

    std::size_t pos = 0;
    for (auto& v : views)
        for (float& x : v.values) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(blob[pos++]) << (8 * b);
            x = std::bit_cast<float>(bits);
        }
    return out;
}

}  // namespace huruf
