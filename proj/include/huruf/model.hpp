#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "huruf/layers.hpp"
#include "huruf/tensor.hpp"

namespace huruf {

/// Order of the stages inside every convolutional block.
enum class BlockStage { conv, activation, batchnorm, maxpool, dropout };
inline constexpr std::array<BlockStage, 5> kBlockOrder{BlockStage::conv, BlockStage::activation,
                                                       BlockStage::batchnorm, BlockStage::maxpool,
                                                       BlockStage::dropout};

/// Declarative description of the network: four conv blocks, global average
/// pooling and a softmax dense head.
struct ModelSpec {
    std::size_t input_side = 64;
    std::size_t in_channels = 1;
    std::vector<std::size_t> filters{16, 34, 64, 128};
    std::size_t num_classes = 28;
    ActivationKind activation = ActivationKind::relu;
    double dropout_rate = 0.2;
    double bn_momentum = 0.99;
    double bn_epsilon = 1e-3;

    static ModelSpec letters(std::size_t side = 64);
    static ModelSpec digits(std::size_t side = 64);
    static ModelSpec with_head(std::size_t num_classes, std::size_t side = 64);

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// One entry of the layer-by-layer shape chain. `shape` is the per-sample output
/// (batch dimension fixed at 1); features after GAP are reported as (1,1,1,c).
struct LayerShape {
    std::string name;
    Shape4 shape;
};

/// Walks the spec and returns the output shape of each of the 18 layers
/// (conv, batchnorm, pool, dropout per block; GAP; dense). Throws ShapeError
/// when the input side does not survive the poolings.
std::vector<LayerShape> shape_chain(const ModelSpec& spec);

template <typename T>
struct ConvBlock {
    ConvParams<T> conv;
    BatchNormParams<T> bn;
};

/// Named view of one stored tensor, in serialization order.
template <typename T>
struct ParamView {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<T> values;
    bool trainable = true;
};

template <typename T>
struct ParameterSet {
    std::vector<ConvBlock<T>> blocks;
    DenseParams<T> head;

    /// Every stored tensor: per block kernels, bias, gamma, beta, running mean,
    /// running variance; then dense weights and bias.
    std::vector<ParamView<T>> views();
    std::vector<ParamView<const T>> views() const;
    /// Subset of views() that the optimizer updates.
    std::vector<ParamView<T>> trainable();

    std::size_t value_count() const;
    std::size_t trainable_count() const;

    /// Same structure, all values zero.
    ParameterSet zeros_like() const;

    template <typename U>
    ParameterSet<U> cast() const;
};

/// Zero-valued parameters with the shapes the spec requires; BN running stats
/// start at (0, 1).
template <typename T>
ParameterSet<T> make_parameters(const ModelSpec& spec);

/// Throws ShapeError unless params has exactly the shapes the spec implies.
template <typename T>
void check_parameters(const ModelSpec& spec, const ParameterSet<T>& params);

/// The network plus the forward records needed for one backward pass.
template <typename T>
class Model {
public:
    Model(ModelSpec spec, ParameterSet<T> params);

    const ModelSpec& spec() const { return spec_; }
    ParameterSet<T>& params() { return params_; }
    const ParameterSet<T>& params() const { return params_; }

    void set_workers(std::size_t workers) { workers_ = workers == 0 ? 1 : workers; }

    /// Returns class probabilities and keeps the records for backward().
    /// Dropout masks are drawn from a generator seeded with dropout_seed.
    Matrix<T> forward(const Tensor4<T>& x, Mode mode, std::uint64_t dropout_seed = 0);

    /// Gradient of the mean cross-entropy against onehot for the batch seen by
    /// the last forward(). Consumes the records; running-stat slots are zero.
    ParameterSet<T> backward(const Matrix<T>& onehot);

    /// Eval-mode probabilities without touching any state. Safe to call
    /// concurrently.
    Matrix<T> predict(const Tensor4<T>& x) const;

private:
    struct BlockRecord {
        Tensor4<T> input;
        Tensor4<T> activated;
        BatchNormRecord<T> bn;
        PoolRecord pool;
        DropoutRecord<T> dropout;
    };
    struct Records {
        std::vector<BlockRecord> blocks;
        Shape4 gap_input{};
        Matrix<T> features;
        Matrix<T> probs;
    };

    ModelSpec spec_;
    ParameterSet<T> params_;
    std::size_t workers_ = 1;
    std::optional<Records> records_;
};

/// Index of the largest entry; the lowest index wins ties.
template <typename T>
std::size_t argmax(std::span<const T> row);

}  // namespace huruf
