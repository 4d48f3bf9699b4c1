#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "huruf/tensor.hpp"

namespace huruf {

enum class Mode { train, eval };

/// Interior-layer nonlinearity. The output head is always softmax.
enum class ActivationKind { relu, tanh, linear };

std::string to_string(ActivationKind kind);
ActivationKind parse_activation(const std::string& name);

using Rng = std::mt19937_64;

/// 3x3 convolution kernels stored as (out_channels, 3, 3, in_channels).
template <typename T>
struct ConvParams {
    Tensor4<T> kernels;
    std::vector<T> bias;

    static ConvParams zeros(std::size_t in_channels, std::size_t out_channels);
    std::size_t in_channels() const { return kernels.shape().c; }
    std::size_t out_channels() const { return kernels.shape().n; }
};

template <typename T>
struct BatchNormParams {
    std::vector<T> gamma;
    std::vector<T> beta;
    std::vector<T> running_mean;
    std::vector<T> running_var;
    T momentum = T(0.99);
    T epsilon = T(1e-3);

    /// gamma = 1, beta = 0, running statistics at the neutral (0, 1).
    static BatchNormParams identity(std::size_t channels, T momentum = T(0.99), T epsilon = T(1e-3));
    std::size_t channels() const { return gamma.size(); }
};

template <typename T>
struct DenseParams {
    Matrix<T> weights;  // in_features x out_features
    std::vector<T> bias;

    std::size_t in_features() const { return weights.rows(); }
    std::size_t out_features() const { return weights.cols(); }
};

// ---------------------------------------------------------------------------
// Convolution: same padding, stride 1, cross-correlation.

template <typename T>
struct ConvGrads {
    Tensor4<T> dx;
    Tensor4<T> dkernels;
    std::vector<T> dbias;
};

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const ConvParams<T>& p, std::size_t workers = 1);

/// Per-sample kernel gradients are summed in sample order, so the result is
/// identical for any worker count.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& x, const ConvParams<T>& p, const Tensor4<T>& dout,
                             std::size_t workers = 1);

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2.

struct PoolRecord {
    Shape4 input_shape{};
    std::vector<std::size_t> argmax;  // flat input index of each output element's winner
};

template <typename T>
struct PoolResult {
    Tensor4<T> out;
    PoolRecord record;
};

template <typename T>
PoolResult<T> maxpool_forward(const Tensor4<T>& x);

template <typename T>
Tensor4<T> maxpool_backward(const Tensor4<T>& dout, const PoolRecord& record);

// ---------------------------------------------------------------------------
// Batch normalization over (n, h, w) per channel.

template <typename T>
struct BatchNormRecord {
    Mode mode = Mode::eval;
    Tensor4<T> x_hat;
    std::vector<T> inv_std;
};

/// Train mode normalizes with biased batch statistics and folds them into the
/// running averages; eval mode uses the running averages only.
template <typename T>
Tensor4<T> batchnorm_forward(const Tensor4<T>& x, BatchNormParams<T>& p, Mode mode,
                             BatchNormRecord<T>* record = nullptr);

/// Eval-mode normalization with the running statistics; never mutates p.
template <typename T>
Tensor4<T> batchnorm_inference(const Tensor4<T>& x, const BatchNormParams<T>& p,
                               BatchNormRecord<T>* record = nullptr);

template <typename T>
struct BatchNormGrads {
    Tensor4<T> dx;
    std::vector<T> dgamma;
    std::vector<T> dbeta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor4<T>& dout, const BatchNormParams<T>& p,
                                     const BatchNormRecord<T>& record);

// ---------------------------------------------------------------------------
// Inverted dropout.

template <typename T>
struct DropoutRecord {
    std::vector<T> mask;  // empty when the layer acted as identity
};

template <typename T>
Tensor4<T> dropout_forward(const Tensor4<T>& x, double rate, Mode mode, Rng& rng,
                           DropoutRecord<T>* record = nullptr);

template <typename T>
Tensor4<T> dropout_backward(const Tensor4<T>& dout, const DropoutRecord<T>& record);

// ---------------------------------------------------------------------------
// Global average pooling: (n, h, w, c) -> n x c features.

template <typename T>
Matrix<T> gap_forward(const Tensor4<T>& x);

template <typename T>
Tensor4<T> gap_backward(const Matrix<T>& dout, const Shape4& input_shape);

// ---------------------------------------------------------------------------
// Dense head.

template <typename T>
struct DenseGrads {
    Matrix<T> dx;
    Matrix<T> dweights;
    std::vector<T> dbias;
};

template <typename T>
Matrix<T> dense_forward(const Matrix<T>& x, const DenseParams<T>& p);

template <typename T>
DenseGrads<T> dense_backward(const Matrix<T>& x, const DenseParams<T>& p, const Matrix<T>& dout);

// ---------------------------------------------------------------------------
// Activations, softmax and the cross-entropy loss.

template <typename T>
void activation_apply(std::span<T> values, ActivationKind kind);

template <typename T>
Tensor4<T> activation_apply(const Tensor4<T>& x, ActivationKind kind);

/// Gradient through the activation, expressed in terms of its output.
template <typename T>
Tensor4<T> activation_backward(const Tensor4<T>& y, const Tensor4<T>& dout, ActivationKind kind);

template <typename T>
Matrix<T> softmax(const Matrix<T>& logits);

/// Mean over rows of -sum_k y_k log(max(p_k, 1e-12)).
template <typename T>
double cross_entropy_loss(const Matrix<T>& probs, const Matrix<T>& onehot);

/// d(mean cross-entropy)/d(logits) = (softmax(logits) - onehot) / rows.
template <typename T>
Matrix<T> softmax_cross_entropy_grad(const Matrix<T>& probs, const Matrix<T>& onehot);

}  // namespace huruf
