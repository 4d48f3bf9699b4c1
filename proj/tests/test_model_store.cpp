#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <random>

#include "fixtures.hpp"
#include "huruf/model_store.hpp"
#include "oracles.hpp"

using namespace huruf;

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(2); }

/// Trained-looking parameters: random weights and non-trivial running stats.
ParameterSet<float> busy_params(const ModelSpec& spec, std::uint64_t seed) {
    ParameterSet<float> p = init_params<float>(spec, InitKind::normal, seed);
    std::mt19937_64 rng(seed);
    for (auto& b : p.blocks) {
        b.bn.running_mean = test::random_vector<float>(b.bn.running_mean.size(), rng);
        b.bn.running_var = test::random_vector<float>(b.bn.running_var.size(), rng, 0.5, 2.0);
        b.bn.beta = test::random_vector<float>(b.bn.beta.size(), rng, -0.1, 0.1);
    }
    return p;
}

}  // namespace

TEST(ShapeChain, LettersAndDigits) {
    const auto chain = shape_chain(ModelSpec::letters());
    ASSERT_EQ(chain.size(), 18u);
    EXPECT_EQ(chain[0].shape, (Shape4{1, 64, 64, 16}));
    EXPECT_EQ(chain[15].shape, (Shape4{1, 4, 4, 128}));
    EXPECT_EQ(chain[16].name, "global_avg_pool");
    EXPECT_EQ(chain[16].shape.c, 128u);
    EXPECT_EQ(chain[17].shape.c, 28u);
    EXPECT_EQ(shape_chain(ModelSpec::digits()).back().shape.c, 10u);
    EXPECT_THROW(shape_chain(ModelSpec::letters(24)), ShapeError);
}

TEST(ParameterCount, MatchesIndependentWalk) {
    for (std::size_t classes : {28u, 10u}) {
        const ModelSpec spec = ModelSpec::with_head(classes);
        const auto expected = test::count_parameters(1, {16, 34, 64, 128}, classes);
        const auto params = make_parameters<float>(spec);
        EXPECT_EQ(params.value_count(), expected.stored);
        EXPECT_EQ(params.trainable_count(), expected.trainable);
        const auto m = make_manifest(params, spec, {LabelMap::for_head(classes).names, std::nullopt});
        EXPECT_EQ(m.stored_value_count, expected.stored);
        EXPECT_EQ(m.trainable_parameter_count, expected.trainable);
        EXPECT_EQ(m.kind, classes == 28 ? "letters" : "digits");
    }
    EXPECT_EQ(test::count_parameters(1, {16, 34, 64, 128}, 28).stored, 103174u);
    EXPECT_EQ(test::count_parameters(1, {16, 34, 64, 128}, 28).trainable, 102690u);
}

TEST(Store, RoundTripPredictsBitwiseIdentically) {
    test::TempDir dir("store");
    for (std::size_t classes : {28u, 10u}) {
        const ModelSpec spec = ModelSpec::with_head(classes);
        const auto params = busy_params(spec, classes);
        TrainConfig cfg;
        cfg.optimizer = OptimizerKind::nadam;
        cfg.epochs = 7;
        const auto where = dir.path() / model_kind(classes);
        save_model(params, spec, {LabelMap::for_head(classes).names, cfg}, where);
        const StoredModel loaded = load_model(where);
        EXPECT_EQ(loaded.spec, spec);
        EXPECT_EQ(loaded.manifest.training, cfg);
        EXPECT_EQ(loaded.manifest.class_names, LabelMap::for_head(classes).names);
        EXPECT_EQ(encode_blob(loaded.params), encode_blob(params));

        std::mt19937_64 rng(classes);
        const auto x = test::random_tensor<float>(Shape4{100, 64, 64, 1}, rng, 0.0, 1.0);
        const Model<float> a(spec, params), b(loaded.spec, loaded.params);
        EXPECT_EQ(a.predict(x), b.predict(x));
    }
}

TEST(Store, SaveLoadSaveIsByteIdentical) {
    test::TempDir dir("store");
    ModelSpec spec = ModelSpec::with_head(10, 32);
    spec.activation = ActivationKind::tanh;
    save_model(busy_params(spec, 3), spec, {LabelMap::digits().names, TrainConfig{}}, dir.path() / "a");
    const auto loaded = load_model(dir.path() / "a");
    EXPECT_EQ(loaded.spec.activation, ActivationKind::tanh);
    save_model(loaded.params, loaded.spec, {loaded.manifest.class_names, loaded.manifest.training}, dir.path() / "b");
    EXPECT_EQ(read_bytes(dir.path() / "a" / kBlobFile), read_bytes(dir.path() / "b" / kBlobFile));
    EXPECT_EQ(read_bytes(dir.path() / "a" / kManifestFile), read_bytes(dir.path() / "b" / kManifestFile));
}

TEST(Store, DigestIsSha256) {
    const std::string abc = "abc";
    const std::vector<std::uint8_t> bytes(abc.begin(), abc.end());
    EXPECT_EQ(sha256_hex(bytes), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Store, CorruptionIsRejected) {
    test::TempDir dir("store");
    const ModelSpec spec = ModelSpec::with_head(10, 16);
    const auto good = dir.path() / "good";
    save_model(busy_params(spec, 1), spec, {LabelMap::digits().names, std::nullopt}, good);
    const auto blob = read_bytes(good / kBlobFile);
    const auto manifest = read_json(good / kManifestFile);

    auto fresh = [&](const std::string& name) {
        const auto p = dir.path() / name;
        std::filesystem::create_directories(p);
        write_bytes(p / kBlobFile, blob);
        write_json(p / kManifestFile, manifest);
        return p;
    };

    const auto truncated = fresh("truncated");
    write_bytes(truncated / kBlobFile, std::vector<std::uint8_t>(blob.begin(), blob.end() - 4));
    EXPECT_THROW(load_model(truncated), ConsistencyError);

    const auto flipped = fresh("flipped");
    auto bad = blob;
    bad[bad.size() / 2] ^= 0x01;
    write_bytes(flipped / kBlobFile, bad);
    EXPECT_THROW(load_model(flipped), ConsistencyError);

    const auto version = fresh("version");
    auto j = manifest;
    j["format_version"] = kFormatVersion + 1;
    write_json(version / kManifestFile, j);
    EXPECT_THROW(load_model(version), VersionError);

    const auto reshaped = fresh("reshaped");
    j = manifest;
    j["layers"][0]["filters"] = 5;
    j["input_side"] = 24;
    write_json(reshaped / kManifestFile, j);
    EXPECT_THROW(load_model(reshaped), ConsistencyError);

    const auto names = fresh("names");
    j = manifest;
    j["class_names"].erase(0);
    write_json(names / kManifestFile, j);
    EXPECT_THROW(load_model(names), ConsistencyError);

    EXPECT_THROW(load_model(dir.path() / "missing"), StorageError);
    EXPECT_NO_THROW(load_model(fresh("intact")));
}

TEST(Store, MismatchedParametersRefusedOnSave) {
    test::TempDir dir("store");
    const auto params = make_parameters<float>(ModelSpec::with_head(10, 16));
    EXPECT_THROW(save_model(params, ModelSpec::with_head(28, 16), {LabelMap::letters().names, std::nullopt},
                            dir.path() / "m"),
                 ConsistencyError);
    EXPECT_THROW(save_model(params, ModelSpec::with_head(10, 16), {LabelMap::letters().names, std::nullopt},
                            dir.path() / "m"),
                 ConsistencyError);
}
