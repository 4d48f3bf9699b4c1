#include "huruf/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "huruf/parallel.hpp"

namespace huruf {

std::string to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::relu: return "relu";
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::linear: return "linear";
    }
    return "unknown";
}

ActivationKind parse_activation(const std::string& name) {
    if (name == "relu") return ActivationKind::relu;
    if (name == "tanh") return ActivationKind::tanh;
    if (name == "linear") return ActivationKind::linear;
    throw ParameterError("unknown activation '" + name + "' (expected relu, tanh or linear)");
}

template <typename T>
ConvParams<T> ConvParams<T>::zeros(std::size_t in_channels, std::size_t out_channels) {
    return ConvParams{Tensor4<T>(Shape4{out_channels, 3, 3, in_channels}), std::vector<T>(out_channels, T(0))};
}

template <typename T>
BatchNormParams<T> BatchNormParams<T>::identity(std::size_t channels, T momentum, T epsilon) {
    BatchNormParams p;
    p.gamma.assign(channels, T(1));
    p.beta.assign(channels, T(0));
    p.running_mean.assign(channels, T(0));
    p.running_var.assign(channels, T(1));
    p.momentum = momentum;
    p.epsilon = epsilon;
    return p;
}

namespace {

constexpr std::size_t kTaps = 9;

// Gathers the zero-padded 3x3 neighbourhood of every pixel of one sample into
// rows of length 9*c, ordered (di, dj, ci) to match the kernel layout.
template <typename T>
void im2col(std::span<const T> img, std::size_t h, std::size_t w, std::size_t c, std::vector<T>& cols) {
    const std::size_t row_len = kTaps * c;
    cols.assign(h * w * row_len, T(0));
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            T* dst = cols.data() + (i * w + j) * row_len;
            for (std::size_t di = 0; di < 3; ++di) {
                const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + di) - 1;
                if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t dj = 0; dj < 3; ++dj) {
                    const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + dj) - 1;
                    if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
                    const T* src = img.data() + (static_cast<std::size_t>(si) * w + static_cast<std::size_t>(sj)) * c;
                    std::copy(src, src + c, dst + (di * 3 + dj) * c);
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const std::vector<T>& cols, std::size_t h, std::size_t w, std::size_t c, std::span<T> img) {
    const std::size_t row_len = kTaps * c;
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const T* src = cols.data() + (i * w + j) * row_len;
            for (std::size_t di = 0; di < 3; ++di) {
                const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + di) - 1;
                if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t dj = 0; dj < 3; ++dj) {
                    const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + dj) - 1;
                    if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
                    T* dst = img.data() + (static_cast<std::size_t>(si) * w + static_cast<std::size_t>(sj)) * c;
                    const T* s = src + (di * 3 + dj) * c;
                    for (std::size_t ci = 0; ci < c; ++ci) dst[ci] += s[ci];
                }
            }
        }
    }
}

template <typename T>
void check_conv_input(const Tensor4<T>& x, const ConvParams<T>& p) {
    if (p.kernels.shape().h != 3 || p.kernels.shape().w != 3) {
        throw ShapeError("convolution kernels must be 3x3, got " + p.kernels.shape().str());
    }
    if (x.shape().c != p.in_channels()) {
        throw ShapeError("convolution expects " + std::to_string(p.in_channels()) + " input channels, got " +
                         std::to_string(x.shape().c));
    }
    if (p.bias.size() != p.out_channels()) throw ShapeError("convolution bias length does not match filter count");
}

}  // namespace

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const ConvParams<T>& p, std::size_t workers) {
    check_conv_input(x, p);
    const Shape4 in = x.shape();
    const std::size_t out_c = p.out_channels();
    const std::size_t row_len = kTaps * in.c;

    // kernel transposed to (9*c_in) x c_out; inner loop over outputs
    std::vector<T> kt(row_len * out_c);
    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t r = 0; r < row_len; ++r) kt[r * out_c + o] = p.kernels.data()[o * row_len + r];

    Tensor4<T> out(Shape4{in.n, in.h, in.w, out_c});
    parallel_for(in.n, workers, [&](std::size_t n) {
        std::vector<T> cols;
        im2col(x.sample(n), in.h, in.w, in.c, cols);
        std::span<T> dst = out.sample(n);
        for (std::size_t px = 0; px < in.h * in.w; ++px) {
            T* acc = dst.data() + px * out_c;
            std::copy(p.bias.begin(), p.bias.end(), acc);
            const T* patch = cols.data() + px * row_len;
            for (std::size_t r = 0; r < row_len; ++r) {
                const T a = patch[r];
                if (a == T(0)) continue;
                const T* k = kt.data() + r * out_c;
                for (std::size_t o = 0; o < out_c; ++o) acc[o] += a * k[o];
            }
        }
    });
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4<T>& x, const ConvParams<T>& p, const Tensor4<T>& dout,
                             std::size_t workers) {
    check_conv_input(x, p);
    const Shape4 in = x.shape();
    const std::size_t out_c = p.out_channels();
    if (dout.shape() != Shape4{in.n, in.h, in.w, out_c}) {
        throw ShapeError("convolution output gradient has shape " + dout.shape().str());
    }
    const std::size_t row_len = kTaps * in.c;
    const std::size_t pixels = in.h * in.w;

    ConvGrads<T> g;
    g.dx = Tensor4<T>(in);
    std::vector<std::vector<T>> dkt_per_sample(in.n);
    std::vector<std::vector<T>> dbias_per_sample(in.n);

    parallel_for(in.n, workers, [&](std::size_t n) {
        std::vector<T> cols;
        im2col(x.sample(n), in.h, in.w, in.c, cols);
        const std::span<const T> gy = dout.sample(n);

        std::vector<T>& dkt = dkt_per_sample[n];
        dkt.assign(row_len * out_c, T(0));
        std::vector<T>& db = dbias_per_sample[n];
        db.assign(out_c, T(0));
        std::vector<T> dcols(pixels * row_len, T(0));

        for (std::size_t px = 0; px < pixels; ++px) {
            const T* g_px = gy.data() + px * out_c;
            for (std::size_t o = 0; o < out_c; ++o) db[o] += g_px[o];

            const T* patch = cols.data() + px * row_len;
            for (std::size_t r = 0; r < row_len; ++r) {
                const T a = patch[r];
                if (a == T(0)) continue;
                T* d = dkt.data() + r * out_c;
                for (std::size_t o = 0; o < out_c; ++o) d[o] += a * g_px[o];
            }

            T* dpatch = dcols.data() + px * row_len;
            for (std::size_t o = 0; o < out_c; ++o) {
                const T go = g_px[o];
                if (go == T(0)) continue;
                const T* k = p.kernels.data() + o * row_len;
                for (std::size_t r = 0; r < row_len; ++r) dpatch[r] += go * k[r];
            }
        }
        col2im_add(dcols, in.h, in.w, in.c, g.dx.sample(n));
    });

    std::vector<T> dkt(row_len * out_c, T(0));
    g.dbias.assign(out_c, T(0));
    for (std::size_t n = 0; n < in.n; ++n) {
        for (std::size_t i = 0; i < dkt.size(); ++i) dkt[i] += dkt_per_sample[n][i];
        for (std::size_t o = 0; o < out_c; ++o) g.dbias[o] += dbias_per_sample[n][o];
    }
    g.dkernels = Tensor4<T>(p.kernels.shape());
    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t r = 0; r < row_len; ++r) g.dkernels.data()[o * row_len + r] = dkt[r * out_c + o];
    return g;
}

template <typename T>
PoolResult<T> maxpool_forward(const Tensor4<T>& x) {
    const Shape4 in = x.shape();
    if (in.h % 2 != 0 || in.w % 2 != 0) {
        throw ShapeError("max pooling needs even spatial dimensions, got " + in.str());
    }
    PoolResult<T> r;
    r.out = Tensor4<T>(Shape4{in.n, in.h / 2, in.w / 2, in.c});
    r.record.input_shape = in;
    r.record.argmax.resize(r.out.size());
    for (std::size_t n = 0; n < in.n; ++n)
        for (std::size_t i = 0; i < in.h / 2; ++i)
            for (std::size_t j = 0; j < in.w / 2; ++j)
                for (std::size_t c = 0; c < in.c; ++c) {
                    std::size_t best = x.index(n, 2 * i, 2 * j, c);
                    for (std::size_t di = 0; di < 2; ++di)
                        for (std::size_t dj = 0; dj < 2; ++dj) {
                            const std::size_t idx = x.index(n, 2 * i + di, 2 * j + dj, c);
                            if (x.data()[idx] > x.data()[best]) best = idx;
                        }
                    const std::size_t o = r.out.index(n, i, j, c);
                    r.out.data()[o] = x.data()[best];
                    r.record.argmax[o] = best;
                }
    return r;
}

template <typename T>
Tensor4<T> maxpool_backward(const Tensor4<T>& dout, const PoolRecord& record) {
    if (dout.size() != record.argmax.size()) throw ShapeError("max pooling gradient does not match its record");
    Tensor4<T> dx(record.input_shape);
    for (std::size_t o = 0; o < dout.size(); ++o) dx.data()[record.argmax[o]] += dout.data()[o];
    return dx;
}

namespace {

template <typename T>
void check_bn_channels(const Tensor4<T>& x, const BatchNormParams<T>& p) {
    if (p.gamma.size() != x.shape().c || p.beta.size() != x.shape().c) {
        throw ShapeError("batch normalization has " + std::to_string(p.gamma.size()) + " channels, input has " +
                         std::to_string(x.shape().c));
    }
    if (!(p.epsilon > T(0))) throw ParameterError("batch normalization epsilon must be positive");
}

template <typename T>
Tensor4<T> normalize(const Tensor4<T>& x, const BatchNormParams<T>& p, const std::vector<T>& mean,
                     std::vector<T> inv_std, Mode mode, BatchNormRecord<T>* record) {
    const std::size_t ch = x.shape().c;
    const std::size_t count = x.size() / ch;
    Tensor4<T> x_hat(x.shape());
    Tensor4<T> out(x.shape());
    for (std::size_t e = 0; e < count; ++e)
        for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t k = e * ch + c;
            x_hat.data()[k] = (x.data()[k] - mean[c]) * inv_std[c];
            out.data()[k] = p.gamma[c] * x_hat.data()[k] + p.beta[c];
        }
    if (record) {
        record->mode = mode;
        record->x_hat = std::move(x_hat);
        record->inv_std = std::move(inv_std);
    }
    return out;
}

}  // namespace

template <typename T>
Tensor4<T> batchnorm_inference(const Tensor4<T>& x, const BatchNormParams<T>& p, BatchNormRecord<T>* record) {
    check_bn_channels(x, p);
    const std::size_t ch = x.shape().c;
    if (p.running_mean.size() != ch || p.running_var.size() != ch) {
        throw StateError("batch normalization running statistics were never initialized");
    }
    std::vector<T> inv_std(ch);
    for (std::size_t c = 0; c < ch; ++c) inv_std[c] = T(1) / std::sqrt(p.running_var[c] + p.epsilon);
    return normalize(x, p, p.running_mean, std::move(inv_std), Mode::eval, record);
}

template <typename T>
Tensor4<T> batchnorm_forward(const Tensor4<T>& x, BatchNormParams<T>& p, Mode mode, BatchNormRecord<T>* record) {
    if (mode == Mode::eval) return batchnorm_inference(x, p, record);
    check_bn_channels(x, p);
    const std::size_t ch = x.shape().c;
    const std::size_t count = x.size() / ch;

    std::vector<double> sum(ch, 0.0);
    for (std::size_t e = 0; e < count; ++e)
        for (std::size_t c = 0; c < ch; ++c) sum[c] += x.data()[e * ch + c];
    std::vector<T> mean(ch);
    for (std::size_t c = 0; c < ch; ++c) mean[c] = static_cast<T>(sum[c] / static_cast<double>(count));
    std::vector<double> sq(ch, 0.0);
    for (std::size_t e = 0; e < count; ++e)
        for (std::size_t c = 0; c < ch; ++c) {
            const double d = static_cast<double>(x.data()[e * ch + c]) - static_cast<double>(mean[c]);
            sq[c] += d * d;
        }
    if (p.running_mean.size() != ch || p.running_var.size() != ch) {
        p.running_mean.assign(ch, T(0));
        p.running_var.assign(ch, T(1));
    }
    std::vector<T> inv_std(ch);
    for (std::size_t c = 0; c < ch; ++c) {
        const T var = static_cast<T>(sq[c] / static_cast<double>(count));
        inv_std[c] = T(1) / std::sqrt(var + p.epsilon);
        p.running_mean[c] = p.momentum * p.running_mean[c] + (T(1) - p.momentum) * mean[c];
        p.running_var[c] = p.momentum * p.running_var[c] + (T(1) - p.momentum) * var;
    }
    return normalize(x, p, mean, std::move(inv_std), Mode::train, record);
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor4<T>& dout, const BatchNormParams<T>& p,
                                     const BatchNormRecord<T>& record) {
    const Shape4 s = dout.shape();
    if (record.x_hat.shape() != s) throw StateError("batch normalization backward without a matching forward");
    const std::size_t ch = s.c;
    const std::size_t count = s.n * s.h * s.w;

    std::vector<double> sum_g(ch, 0.0);
    std::vector<double> sum_gx(ch, 0.0);
    for (std::size_t e = 0; e < count; ++e)
        for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t k = e * ch + c;
            sum_g[c] += dout.data()[k];
            sum_gx[c] += static_cast<double>(dout.data()[k]) * record.x_hat.data()[k];
        }

    BatchNormGrads<T> g;
    g.dgamma.resize(ch);
    g.dbeta.resize(ch);
    for (std::size_t c = 0; c < ch; ++c) {
        g.dgamma[c] = static_cast<T>(sum_gx[c]);
        g.dbeta[c] = static_cast<T>(sum_g[c]);
    }

    g.dx = Tensor4<T>(s);
    if (record.mode == Mode::eval) {
        for (std::size_t e = 0; e < count; ++e)
            for (std::size_t c = 0; c < ch; ++c) {
                const std::size_t k = e * ch + c;
                g.dx.data()[k] = dout.data()[k] * p.gamma[c] * record.inv_std[c];
            }
        return g;
    }

    // dx = gamma * inv_std / N * (N * dy - sum(dy) - x_hat * sum(dy * x_hat))
    const double inv_count = 1.0 / static_cast<double>(count);
    for (std::size_t e = 0; e < count; ++e)
        for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t k = e * ch + c;
            const double centered = static_cast<double>(dout.data()[k]) - sum_g[c] * inv_count -
                                    static_cast<double>(record.x_hat.data()[k]) * sum_gx[c] * inv_count;
            g.dx.data()[k] = static_cast<T>(static_cast<double>(p.gamma[c]) * record.inv_std[c] * centered);
        }
    return g;
}

template <typename T>
Tensor4<T> dropout_forward(const Tensor4<T>& x, double rate, Mode mode, Rng& rng, DropoutRecord<T>* record) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (record) record->mask.clear();
    if (mode == Mode::eval || rate == 0.0) return x;

    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    std::vector<T> mask(x.size());
    for (T& m : mask) m = std::generate_canonical<double, 53>(rng) < rate ? T(0) : keep_scale;

    Tensor4<T> out = x;
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] *= mask[k];
    if (record) record->mask = std::move(mask);
    return out;
}

template <typename T>
Tensor4<T> dropout_backward(const Tensor4<T>& dout, const DropoutRecord<T>& record) {
    if (record.mask.empty()) return dout;
    if (record.mask.size() != dout.size()) throw StateError("dropout backward without a matching forward");
    Tensor4<T> dx = dout;
    for (std::size_t k = 0; k < dx.size(); ++k) dx.data()[k] *= record.mask[k];
    return dx;
}

template <typename T>
Matrix<T> gap_forward(const Tensor4<T>& x) {
    const Shape4 s = x.shape();
    Matrix<T> out(s.n, s.c);
    const double inv_area = 1.0 / static_cast<double>(s.h * s.w);
    for (std::size_t n = 0; n < s.n; ++n) {
        std::vector<double> sum(s.c, 0.0);
        const std::span<const T> img = x.sample(n);
        for (std::size_t px = 0; px < s.h * s.w; ++px)
            for (std::size_t c = 0; c < s.c; ++c) sum[c] += img[px * s.c + c];
        for (std::size_t c = 0; c < s.c; ++c) out(n, c) = static_cast<T>(sum[c] * inv_area);
    }
    return out;
}

template <typename T>
Tensor4<T> gap_backward(const Matrix<T>& dout, const Shape4& input_shape) {
    if (dout.rows() != input_shape.n || dout.cols() != input_shape.c) {
        throw ShapeError("global average pooling gradient does not match input " + input_shape.str());
    }
    Tensor4<T> dx(input_shape);
    const T inv_area = static_cast<T>(1.0 / static_cast<double>(input_shape.h * input_shape.w));
    for (std::size_t n = 0; n < input_shape.n; ++n) {
        std::span<T> img = dx.sample(n);
        for (std::size_t px = 0; px < input_shape.h * input_shape.w; ++px)
            for (std::size_t c = 0; c < input_shape.c; ++c) img[px * input_shape.c + c] = dout(n, c) * inv_area;
    }
    return dx;
}

template <typename T>
Matrix<T> dense_forward(const Matrix<T>& x, const DenseParams<T>& p) {
    if (x.cols() != p.in_features()) {
        throw ShapeError("dense layer expects " + std::to_string(p.in_features()) + " features, got " +
                         std::to_string(x.cols()));
    }
    if (p.bias.size() != p.out_features()) throw ShapeError("dense bias length does not match output width");
    const std::size_t out_f = p.out_features();
    Matrix<T> out(x.rows(), out_f);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::span<T> acc = out.row(r);
        std::copy(p.bias.begin(), p.bias.end(), acc.begin());
        for (std::size_t i = 0; i < x.cols(); ++i) {
            const T a = x(r, i);
            const std::span<const T> w = p.weights.row(i);
            for (std::size_t o = 0; o < out_f; ++o) acc[o] += a * w[o];
        }
    }
    return out;
}

template <typename T>
DenseGrads<T> dense_backward(const Matrix<T>& x, const DenseParams<T>& p, const Matrix<T>& dout) {
    if (dout.rows() != x.rows() || dout.cols() != p.out_features()) {
        throw ShapeError("dense output gradient has the wrong shape");
    }
    DenseGrads<T> g;
    g.dx = Matrix<T>(x.rows(), p.in_features());
    g.dweights = Matrix<T>(p.in_features(), p.out_features());
    g.dbias.assign(p.out_features(), T(0));
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const std::span<const T> gy = dout.row(r);
        for (std::size_t o = 0; o < gy.size(); ++o) g.dbias[o] += gy[o];
        for (std::size_t i = 0; i < p.in_features(); ++i) {
            const T a = x(r, i);
            std::span<T> dw = g.dweights.row(i);
            const std::span<const T> w = p.weights.row(i);
            T acc = T(0);
            for (std::size_t o = 0; o < gy.size(); ++o) {
                dw[o] += a * gy[o];
                acc += gy[o] * w[o];
            }
            g.dx(r, i) = acc;
        }
    }
    return g;
}

template <typename T>
void activation_apply(std::span<T> values, ActivationKind kind) {
    switch (kind) {
        case ActivationKind::relu:
            for (T& v : values) v = v > T(0) ? v : T(0);
            break;
        case ActivationKind::tanh:
            for (T& v : values) v = std::tanh(v);
            break;
        case ActivationKind::linear:
            break;
    }
}

template <typename T>
Tensor4<T> activation_apply(const Tensor4<T>& x, ActivationKind kind) {
    Tensor4<T> out = x;
    activation_apply(out.values(), kind);
    return out;
}

template <typename T>
Tensor4<T> activation_backward(const Tensor4<T>& y, const Tensor4<T>& dout, ActivationKind kind) {
    if (y.shape() != dout.shape()) throw ShapeError("activation gradient shape mismatch");
    Tensor4<T> dx = dout;
    switch (kind) {
        case ActivationKind::relu:
            for (std::size_t k = 0; k < dx.size(); ++k)
                if (!(y.data()[k] > T(0))) dx.data()[k] = T(0);
            break;
        case ActivationKind::tanh:
            for (std::size_t k = 0; k < dx.size(); ++k) dx.data()[k] *= T(1) - y.data()[k] * y.data()[k];
            break;
        case ActivationKind::linear:
            break;
    }
    return dx;
}

template <typename T>
Matrix<T> softmax(const Matrix<T>& logits) {
    if (logits.cols() == 0) throw ShapeError("softmax needs at least one class");
    Matrix<T> out(logits.rows(), logits.cols());
    std::vector<double> e(logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const std::span<const T> z = logits.row(r);
        const double top = static_cast<double>(*std::max_element(z.begin(), z.end()));
        double sum = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) {
            e[k] = std::exp(static_cast<double>(z[k]) - top);
            sum += e[k];
        }
        for (std::size_t k = 0; k < z.size(); ++k) out(r, k) = static_cast<T>(e[k] / sum);
    }
    return out;
}

template <typename T>
double cross_entropy_loss(const Matrix<T>& probs, const Matrix<T>& onehot) {
    if (probs.rows() != onehot.rows() || probs.cols() != onehot.cols()) {
        throw ShapeError("cross-entropy: probabilities and targets differ in shape");
    }
    if (probs.rows() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t r = 0; r < probs.rows(); ++r)
        for (std::size_t k = 0; k < probs.cols(); ++k) {
            const double y = onehot(r, k);
            if (y != 0.0) total -= y * std::log(std::max(static_cast<double>(probs(r, k)), 1e-12));
        }
    return total / static_cast<double>(probs.rows());
}

template <typename T>
Matrix<T> softmax_cross_entropy_grad(const Matrix<T>& probs, const Matrix<T>& onehot) {
    if (probs.rows() != onehot.rows() || probs.cols() != onehot.cols()) {
        throw ShapeError("cross-entropy gradient: probabilities and targets differ in shape");
    }
    Matrix<T> g(probs.rows(), probs.cols());
    const T inv_rows = T(1) / static_cast<T>(probs.rows());
    for (std::size_t k = 0; k < g.size(); ++k) g.values()[k] = (probs.values()[k] - onehot.values()[k]) * inv_rows;
    return g;
}

#define HURUF_INSTANTIATE_LAYERS(T)                                                                              \
    template struct ConvParams<T>;                                                                               \
    template struct BatchNormParams<T>;                                                                          \
    template Tensor4<T> conv2d_forward(const Tensor4<T>&, const ConvParams<T>&, std::size_t);                   \
    template ConvGrads<T> conv2d_backward(const Tensor4<T>&, const ConvParams<T>&, const Tensor4<T>&,           \
                                          std::size_t);                                                          \
    template PoolResult<T> maxpool_forward(const Tensor4<T>&);                                                   \
    template Tensor4<T> maxpool_backward(const Tensor4<T>&, const PoolRecord&);                                  \
    template Tensor4<T> batchnorm_forward(const Tensor4<T>&, BatchNormParams<T>&, Mode, BatchNormRecord<T>*);   \
    template Tensor4<T> batchnorm_inference(const Tensor4<T>&, const BatchNormParams<T>&, BatchNormRecord<T>*);  \
    template BatchNormGrads<T> batchnorm_backward(const Tensor4<T>&, const BatchNormParams<T>&,                 \
                                                  const BatchNormRecord<T>&);                                    \
    template Tensor4<T> dropout_forward(const Tensor4<T>&, double, Mode, Rng&, DropoutRecord<T>*);               \
    template Tensor4<T> dropout_backward(const Tensor4<T>&, const DropoutRecord<T>&);                            \
    template Matrix<T> gap_forward(const Tensor4<T>&);                                                           \
    template Tensor4<T> gap_backward(const Matrix<T>&, const Shape4&);                                           \
    template Matrix<T> dense_forward(const Matrix<T>&, const DenseParams<T>&);                                   \
    template DenseGrads<T> dense_backward(const Matrix<T>&, const DenseParams<T>&, const Matrix<T>&);            \
    template void activation_apply(std::span<T>, ActivationKind);                                                \
    template Tensor4<T> activation_apply(const Tensor4<T>&, ActivationKind);                                     \
    template Tensor4<T> activation_backward(const Tensor4<T>&, const Tensor4<T>&, ActivationKind);               \
    template Matrix<T> softmax(const Matrix<T>&);                                                                \
    template double cross_entropy_loss(const Matrix<T>&, const Matrix<T>&);                                      \
    template Matrix<T> softmax_cross_entropy_grad(const Matrix<T>&, const Matrix<T>&);

HURUF_INSTANTIATE_LAYERS(float)
HURUF_INSTANTIATE_LAYERS(double)

#undef HURUF_INSTANTIATE_LAYERS

}  // namespace huruf
