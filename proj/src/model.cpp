#include "huruf/model.hpp"

#include <algorithm>

namespace huruf {

ModelSpec ModelSpec::letters(std::size_t side) { return with_head(28, side); }
ModelSpec ModelSpec::digits(std::size_t side) { return with_head(10, side); }

ModelSpec ModelSpec::with_head(std::size_t num_classes, std::size_t side) {
    ModelSpec s;
    s.num_classes = num_classes;
    s.input_side = side;
    return s;
}

std::vector<LayerShape> shape_chain(const ModelSpec& spec) {
    if (spec.filters.empty()) throw ShapeError("model needs at least one convolutional block");
    if (spec.num_classes == 0) throw ShapeError("model head needs at least one class");
    if (spec.in_channels == 0) throw ShapeError("model input needs at least one channel");

    std::vector<LayerShape> chain;
    std::size_t side = spec.input_side;
    for (std::size_t b = 0; b < spec.filters.size(); ++b) {
        const std::string tag = std::to_string(b + 1);
        const std::size_t ch = spec.filters[b];
        if (ch == 0) throw ShapeError("block " + tag + " has zero filters");
        if (side < 2 || side % 2 != 0) {
            throw ShapeError("input side " + std::to_string(spec.input_side) + " cannot be halved " +
                             std::to_string(spec.filters.size()) + " times");
        }
        chain.push_back({"conv" + tag, {1, side, side, ch}});
        chain.push_back({"batchnorm" + tag, {1, side, side, ch}});
        side /= 2;
        chain.push_back({"maxpool" + tag, {1, side, side, ch}});
        chain.push_back({"dropout" + tag, {1, side, side, ch}});
    }
    chain.push_back({"global_avg_pool", {1, 1, 1, spec.filters.back()}});
    chain.push_back({"dense", {1, 1, 1, spec.num_classes}});
    return chain;
}

template <typename T>
ParameterSet<T> make_parameters(const ModelSpec& spec) {
    shape_chain(spec);
    ParameterSet<T> p;
    std::size_t in = spec.in_channels;
    for (std::size_t f : spec.filters) {
        p.blocks.push_back({ConvParams<T>::zeros(in, f),
                            BatchNormParams<T>::identity(f, static_cast<T>(spec.bn_momentum),
                                                         static_cast<T>(spec.bn_epsilon))});
        in = f;
    }
    p.head.weights = Matrix<T>(in, spec.num_classes);
    p.head.bias.assign(spec.num_classes, T(0));
    return p;
}

template <typename T>
void check_parameters(const ModelSpec& spec, const ParameterSet<T>& params) {
    shape_chain(spec);
    if (params.blocks.size() != spec.filters.size()) {
        throw ShapeError("parameter set has " + std::to_string(params.blocks.size()) + " blocks, model has " +
                         std::to_string(spec.filters.size()));
    }
    std::size_t in = spec.in_channels;
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        const auto& blk = params.blocks[b];
        const std::size_t f = spec.filters[b];
        const std::string tag = "block " + std::to_string(b + 1);
        if (blk.conv.kernels.shape() != Shape4{f, 3, 3, in} || blk.conv.bias.size() != f) {
            throw ShapeError(tag + " kernels " + blk.conv.kernels.shape().str() + " do not match expected " +
                             Shape4{f, 3, 3, in}.str());
        }
        if (blk.bn.gamma.size() != f || blk.bn.beta.size() != f || blk.bn.running_mean.size() != f ||
            blk.bn.running_var.size() != f) {
            throw ShapeError(tag + " batch normalization vectors do not have " + std::to_string(f) + " channels");
        }
        in = f;
    }
    if (params.head.weights.rows() != in || params.head.weights.cols() != spec.num_classes ||
        params.head.bias.size() != spec.num_classes) {
        throw ShapeError("dense head is " + std::to_string(params.head.weights.rows()) + "x" +
                         std::to_string(params.head.weights.cols()) + ", expected " + std::to_string(in) + "x" +
                         std::to_string(spec.num_classes));
    }
}

namespace {

template <typename P, typename Blocks, typename Head>
auto collect_views(Blocks& blocks, Head& head) {
    using V = ParamView<P>;
    std::vector<V> v;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        auto& blk = blocks[b];
        const std::string pre = "block" + std::to_string(b + 1) + ".";
        const Shape4 ks = blk.conv.kernels.shape();
        const std::size_t ch = blk.conv.bias.size();
        v.push_back(V{pre + "conv.kernels", {ks.n, ks.h, ks.w, ks.c}, blk.conv.kernels.values(), true});
        v.push_back(V{pre + "conv.bias", {ch}, std::span<P>(blk.conv.bias), true});
        v.push_back(V{pre + "bn.gamma", {blk.bn.gamma.size()}, std::span<P>(blk.bn.gamma), true});
        v.push_back(V{pre + "bn.beta", {blk.bn.beta.size()}, std::span<P>(blk.bn.beta), true});
        v.push_back(V{pre + "bn.running_mean", {blk.bn.running_mean.size()}, std::span<P>(blk.bn.running_mean),
                      false});
        v.push_back(V{pre + "bn.running_var", {blk.bn.running_var.size()}, std::span<P>(blk.bn.running_var),
                      false});
    }
    v.push_back(V{"dense.weights", {head.weights.rows(), head.weights.cols()}, head.weights.values(), true});
    v.push_back(V{"dense.bias", {head.bias.size()}, std::span<P>(head.bias), true});
    return v;
}

}  // namespace

template <typename T>
std::vector<ParamView<T>> ParameterSet<T>::views() {
    return collect_views<T>(blocks, head);
}

template <typename T>
std::vector<ParamView<const T>> ParameterSet<T>::views() const {
    return collect_views<const T>(blocks, head);
}

template <typename T>
std::vector<ParamView<T>> ParameterSet<T>::trainable() {
    std::vector<ParamView<T>> all = views();
    std::erase_if(all, [](const ParamView<T>& v) { return !v.trainable; });
    return all;
}

template <typename T>
std::size_t ParameterSet<T>::value_count() const {
    std::size_t n = 0;
    for (const auto& v : views()) n += v.values.size();
    return n;
}

template <typename T>
std::size_t ParameterSet<T>::trainable_count() const {
    std::size_t n = 0;
    for (const auto& v : views())
        if (v.trainable) n += v.values.size();
    return n;
}

template <typename T>
ParameterSet<T> ParameterSet<T>::zeros_like() const {
    ParameterSet<T> z = *this;
    for (auto& v : z.views()) std::fill(v.values.begin(), v.values.end(), T(0));
    return z;
}

template <typename T>
template <typename U>
ParameterSet<U> ParameterSet<T>::cast() const {
    ParameterSet<U> out;
    for (const auto& blk : blocks) {
        ConvBlock<U> b;
        b.conv = ConvParams<U>::zeros(blk.conv.in_channels(), blk.conv.out_channels());
        b.bn = BatchNormParams<U>::identity(blk.bn.channels(), static_cast<U>(blk.bn.momentum),
                                           static_cast<U>(blk.bn.epsilon));
        out.blocks.push_back(std::move(b));
    }
    out.head.weights = Matrix<U>(head.weights.rows(), head.weights.cols());
    out.head.bias.assign(head.bias.size(), U(0));
    auto src = views();
    auto dst = out.views();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (dst[i].values.size() != src[i].values.size()) throw ShapeError("cannot cast parameter " + src[i].name);
        std::transform(src[i].values.begin(), src[i].values.end(), dst[i].values.begin(),
                       [](T x) { return static_cast<U>(x); });
    }
    return out;
}

template <typename T>
std::size_t argmax(std::span<const T> row) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k)
        if (row[k] > row[best]) best = k;
    return best;
}

template <typename T>
Model<T>::Model(ModelSpec spec, ParameterSet<T> params) : spec_(std::move(spec)), params_(std::move(params)) {
    check_parameters(spec_, params_);
}

template <typename T>
Matrix<T> Model<T>::forward(const Tensor4<T>& x, Mode mode, std::uint64_t dropout_seed) {
    const Shape4 s = x.shape();
    if (s.h != spec_.input_side || s.w != spec_.input_side || s.c != spec_.in_channels) {
        throw ShapeError("model expects input (n," + std::to_string(spec_.input_side) + "," +
                         std::to_string(spec_.input_side) + "," + std::to_string(spec_.in_channels) + "), got " +
                         s.str());
    }
    records_.reset();
    Records rec;
    rec.blocks.resize(params_.blocks.size());
    Rng rng(dropout_seed);

    Tensor4<T> h = x;
    for (std::size_t b = 0; b < params_.blocks.size(); ++b) {
        auto& blk = params_.blocks[b];
        auto& r = rec.blocks[b];
        for (BlockStage stage : kBlockOrder) {
            switch (stage) {
                case BlockStage::conv:
                    r.input = h;
                    h = conv2d_forward(h, blk.conv, workers_);
                    break;
                case BlockStage::activation:
                    activation_apply(h.values(), spec_.activation);
                    r.activated = h;
                    break;
                case BlockStage::batchnorm:
                    h = batchnorm_forward(h, blk.bn, mode, &r.bn);
                    break;
                case BlockStage::maxpool: {
                    auto pooled = maxpool_forward(h);
                    h = std::move(pooled.out);
                    r.pool = std::move(pooled.record);
                    break;
                }
                case BlockStage::dropout:
                    h = dropout_forward(h, spec_.dropout_rate, mode, rng, &r.dropout);
                    break;
            }
        }
    }
    rec.gap_input = h.shape();
    rec.features = gap_forward(h);
    rec.probs = softmax(dense_forward(rec.features, params_.head));
    Matrix<T> probs = rec.probs;
    records_ = std::move(rec);
    return probs;
}

template <typename T>
ParameterSet<T> Model<T>::backward(const Matrix<T>& onehot) {
    if (!records_) throw StateError("backward called without a matching forward pass");
    Records rec = std::move(*records_);
    records_.reset();
    if (onehot.rows() != rec.probs.rows() || onehot.cols() != rec.probs.cols()) {
        throw ShapeError("targets do not match the batch of the last forward pass");
    }

    ParameterSet<T> grads = params_.zeros_like();
    const Matrix<T> dlogits = softmax_cross_entropy_grad(rec.probs, onehot);
    DenseGrads<T> dg = dense_backward(rec.features, params_.head, dlogits);
    grads.head.weights = std::move(dg.dweights);
    grads.head.bias = std::move(dg.dbias);

    Tensor4<T> dh = gap_backward(dg.dx, rec.gap_input);
    for (std::size_t b = params_.blocks.size(); b-- > 0;) {
        const auto& blk = params_.blocks[b];
        auto& r = rec.blocks[b];
        auto& gb = grads.blocks[b];
        for (auto it = kBlockOrder.rbegin(); it != kBlockOrder.rend(); ++it) {
            switch (*it) {
                case BlockStage::dropout:
                    dh = dropout_backward(dh, r.dropout);
                    break;
                case BlockStage::maxpool:
                    dh = maxpool_backward(dh, r.pool);
                    break;
                case BlockStage::batchnorm: {
                    BatchNormGrads<T> g = batchnorm_backward(dh, blk.bn, r.bn);
                    dh = std::move(g.dx);
                    gb.bn.gamma = std::move(g.dgamma);
                    gb.bn.beta = std::move(g.dbeta);
                    break;
                }
                case BlockStage::activation:
                    dh = activation_backward(r.activated, dh, spec_.activation);
                    break;
                case BlockStage::conv: {
                    ConvGrads<T> g = conv2d_backward(r.input, blk.conv, dh, workers_);
                    dh = std::move(g.dx);
                    gb.conv.kernels = std::move(g.dkernels);
                    gb.conv.bias = std::move(g.dbias);
                    break;
                }
            }
        }
    }
    return grads;
}

template <typename T>
Matrix<T> Model<T>::predict(const Tensor4<T>& x) const {
    const Shape4 s = x.shape();
    if (s.h != spec_.input_side || s.w != spec_.input_side || s.c != spec_.in_channels) {
        throw ShapeError("model expects " + std::to_string(spec_.input_side) + "x" +
                         std::to_string(spec_.input_side) + " input, got " + s.str());
    }
    Tensor4<T> h = x;
    for (const auto& blk : params_.blocks) {
        for (BlockStage stage : kBlockOrder) {
            switch (stage) {
                case BlockStage::conv: h = conv2d_forward(h, blk.conv, workers_); break;
                case BlockStage::activation: activation_apply(h.values(), spec_.activation); break;
                case BlockStage::batchnorm: h = batchnorm_inference(h, blk.bn); break;
                case BlockStage::maxpool: h = maxpool_forward(h).out; break;
                case BlockStage::dropout: break;
            }
        }
    }
    return softmax(dense_forward(gap_forward(h), params_.head));
}

#define HURUF_INSTANTIATE_MODEL(T)                                                \
    template struct ParameterSet<T>;                                              \
    template ParameterSet<T> make_parameters<T>(const ModelSpec&);                \
    template void check_parameters<T>(const ModelSpec&, const ParameterSet<T>&);  \
    template class Model<T>;                                                      \
    template std::size_t argmax<T>(std::span<const T>);

HURUF_INSTANTIATE_MODEL(float)
HURUF_INSTANTIATE_MODEL(double)

template ParameterSet<double> ParameterSet<float>::cast<double>() const;
template ParameterSet<float> ParameterSet<double>::cast<float>() const;
template ParameterSet<float> ParameterSet<float>::cast<float>() const;

#undef HURUF_INSTANTIATE_MODEL

}  // namespace huruf
