#include "bnn/network.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

namespace bnn {

const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Linear: return "linear";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::AffineNorm: return "affine_norm";
        case LayerKind::SignAct: return "sign";
        case LayerKind::HtanhAct: return "htanh";
    }
    return "?";
}

const char* to_string(KernelChoice k) {
    switch (k) {
        case KernelChoice::Float: return "float";
        case KernelChoice::Binary: return "binary";
        case KernelChoice::Naive: return "naive";
    }
    return "?";
}

LayerKind parse_layer_kind(const std::string& s) {
    if (s == "conv") return LayerKind::Conv;
    if (s == "linear") return LayerKind::Linear;
    if (s == "maxpool") return LayerKind::MaxPool;
    if (s == "affine_norm") return LayerKind::AffineNorm;
    if (s == "sign") return LayerKind::SignAct;
    if (s == "htanh") return LayerKind::HtanhAct;
    throw ConfigError("unknown layer kind '" + s + "'");
}

KernelChoice parse_kernel_choice(const std::string& s) {
    if (s == "float") return KernelChoice::Float;
    if (s == "binary") return KernelChoice::Binary;
    if (s == "naive") return KernelChoice::Naive;
    throw ConfigError("unknown kernel choice '" + s + "', expected binary|float|naive");
}

// ---------------------------------------------------------------- layer ops

FloatTensor conv_forward_float(const FloatTensor& x, const FloatMatrix& w_flat,
                               std::span<const float> bias, const ConvGeometry& geom,
                               unsigned threads) {
    const auto [out_h, out_w] = output_dims(geom, x.height, x.width);
    FloatTensor out(x.batch, geom.out_channels, out_h, out_w);
    for (std::size_t b = 0; b < x.batch; ++b) {
        FloatMatrix col = im2col(x, b, geom);
        FloatMatrix a = bias_add(float_gemm(w_flat, col, threads), bias);
        FloatTensor slice = reshape_output(a, out_h, out_w);
        std::copy(slice.data.begin(), slice.data.end(),
                  out.data.begin() + b * slice.data.size());
    }
    return out;
}

FloatTensor conv_forward_binary(const FloatTensor& x, const PackedBitMatrix& packed_w,
                                std::span<const float> bias, const ConvGeometry& geom,
                                unsigned threads) {
    const auto [out_h, out_w] = output_dims(geom, x.height, x.width);
    FloatTensor out(x.batch, geom.out_channels, out_h, out_w);
    const std::size_t inner = geom.patch_len();
    for (std::size_t b = 0; b < x.batch; ++b) {
        PackedBitMatrix col = pack_cols(sign(im2col(x, b, geom)));
        FloatMatrix a = bias_add(to_float(xnor_gemm(packed_w, col, inner, threads)), bias);
        FloatTensor slice = reshape_output(a, out_h, out_w);
        std::copy(slice.data.begin(), slice.data.end(),
                  out.data.begin() + b * slice.data.size());
    }
    return out;
}

FloatTensor conv_forward_binary_reference(const FloatTensor& x, const FloatMatrix& w_pm1,
                                          std::span<const float> bias,
                                          const ConvGeometry& geom, unsigned threads) {
    const auto [out_h, out_w] = output_dims(geom, x.height, x.width);
    FloatTensor out(x.batch, geom.out_channels, out_h, out_w);
    for (std::size_t b = 0; b < x.batch; ++b) {
        FloatMatrix col = sign(im2col(x, b, geom));
        FloatMatrix a = bias_add(float_gemm(w_pm1, col, threads), bias);
        FloatTensor slice = reshape_output(a, out_h, out_w);
        std::copy(slice.data.begin(), slice.data.end(),
                  out.data.begin() + b * slice.data.size());
    }
    return out;
}

FloatTensor conv_forward_naive(const FloatTensor& x, const FloatTensor& w,
                               std::span<const float> bias, const ConvGeometry& geom) {
    const auto [out_h, out_w] = output_dims(geom, x.height, x.width);
    if (bias.size() != geom.out_channels)
        throw ShapeError("conv: bias length does not match output channels");
    FloatTensor out(x.batch, geom.out_channels, out_h, out_w);
    for (std::size_t b = 0; b < x.batch; ++b) {
        FloatTensor slice = naive_conv(x, b, w, geom);
        for (std::size_t d = 0; d < geom.out_channels; ++d)
            for (std::size_t i = 0; i < out_h * out_w; ++i)
                slice.data[d * out_h * out_w + i] += bias[d];
        std::copy(slice.data.begin(), slice.data.end(),
                  out.data.begin() + b * slice.data.size());
    }
    return out;
}

FloatMatrix linear_forward(const FloatMatrix& x, const FloatMatrix& w,
                           std::span<const float> bias, KernelChoice kernel,
                           unsigned threads) {
    if (kernel == KernelChoice::Binary)
        return linear_forward_packed(x, pack_rows(sign(w)), bias, threads);
    return bias_add(float_gemm(w, x, threads), bias);
}

FloatMatrix linear_forward_packed(const FloatMatrix& x, const PackedBitMatrix& packed_w,
                                  std::span<const float> bias, unsigned threads) {
    PackedBitMatrix px = pack_cols(sign(x));
    return bias_add(
        to_float(xnor_gemm(packed_w, px, packed_w.logical_cols, threads)), bias);
}

FloatMatrix linear_forward_binary_reference(const FloatMatrix& x, const FloatMatrix& w_pm1,
                                            std::span<const float> bias, unsigned threads) {
    return bias_add(float_gemm(w_pm1, sign(x), threads), bias);
}

FloatTensor maxpool2(const FloatTensor& x) {
    if (x.height % 2 != 0 || x.width % 2 != 0)
        throw ShapeError("maxpool2: spatial extents must be even, got " +
                         std::to_string(x.height) + "x" + std::to_string(x.width));
    FloatTensor out(x.batch, x.channels, x.height / 2, x.width / 2);
    for (std::size_t b = 0; b < x.batch; ++b)
        for (std::size_t c = 0; c < x.channels; ++c)
            for (std::size_t h = 0; h < out.height; ++h)
                for (std::size_t w = 0; w < out.width; ++w) {
                    const float a = x.at(b, c, 2 * h, 2 * w);
                    const float bb = x.at(b, c, 2 * h, 2 * w + 1);
                    const float cc = x.at(b, c, 2 * h + 1, 2 * w);
                    const float dd = x.at(b, c, 2 * h + 1, 2 * w + 1);
                    out.at(b, c, h, w) = std::max(std::max(a, bb), std::max(cc, dd));
                }
    return out;
}

FloatTensor affine_norm(FloatTensor x, std::span<const float> scale,
                        std::span<const float> shift) {
    if (scale.size() != x.channels || shift.size() != x.channels)
        throw ShapeError("affine_norm: parameter length does not match channels");
    const std::size_t plane = x.height * x.width;
    for (std::size_t b = 0; b < x.batch; ++b)
        for (std::size_t c = 0; c < x.channels; ++c) {
            float* p = x.data.data() + (b * x.channels + c) * plane;
            const float s = scale[c], t = shift[c];
            for (std::size_t i = 0; i < plane; ++i) p[i] = s * p[i] + t;
        }
    return x;
}

FloatMatrix affine_norm(FloatMatrix x, std::span<const float> scale,
                        std::span<const float> shift) {
    if (scale.size() != x.rows || shift.size() != x.rows)
        throw ShapeError("affine_norm: parameter length does not match features");
    for (std::size_t r = 0; r < x.rows; ++r) {
        float* p = x.row(r);
        const float s = scale[r], t = shift[r];
        for (std::size_t j = 0; j < x.cols; ++j) p[j] = s * p[j] + t;
    }
    return x;
}

FloatMatrix flatten_to_columns(const FloatTensor& x) {
    const std::size_t features = x.channels * x.height * x.width;
    FloatMatrix m(features, x.batch);
    for (std::size_t b = 0; b < x.batch; ++b)
        for (std::size_t f = 0; f < features; ++f)
            m.at(f, b) = x.data[b * features + f];
    return m;
}

// ----------------------------------------------------------------- building

namespace {

[[noreturn]] void chain_error(std::size_t index, LayerKind kind, const std::string& msg) {
    throw ShapeError("layer " + std::to_string(index) + " (" +
                     std::string(to_string(kind)) + "): " + msg);
}

struct ChainState {
    std::size_t channels, h, w;
    bool flat;
    std::size_t features() const { return flat ? channels : channels * h * w; }
};

}  // namespace

Network build_network(const NetworkSpec& spec) {
    Network net;
    net.spec = spec;
    net.in_channels = spec.input_shape[1];
    net.in_h = spec.input_shape[2];
    net.in_w = spec.input_shape[3];
    if (spec.layers.empty()) throw ShapeError("network has no layers");

    ChainState cur{net.in_channels, net.in_h, net.in_w, false};
    net.layers.reserve(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& ls = spec.layers[i];
        BuiltLayer layer;
        layer.spec = ls;
        const std::uint64_t base = ls.seed ? *ls.seed : mix64(spec.seed, i);

        switch (ls.kind) {
            case LayerKind::Conv: {
                if (cur.flat) chain_error(i, ls.kind, "input is already flattened");
                if (ls.out_channels == 0 || ls.kernel_h == 0 || ls.kernel_w == 0)
                    chain_error(i, ls.kind, "out_channels and kernel size are required");
                layer.geom = ConvGeometry{ls.kernel_h, ls.kernel_w, ls.stride_h,
                                          ls.stride_w,  ls.pad_h,    ls.pad_w,
                                          cur.channels, ls.out_channels};
                std::size_t oh = 0, ow = 0;
                try {
                    std::tie(oh, ow) = output_dims(layer.geom, cur.h, cur.w);
                } catch (const ShapeError& e) {
                    chain_error(i, ls.kind, e.what());
                }
                if (!ls.weights_blob.empty()) {
                    layer.weight_tensor = load_tensor_blob(ls.weights_blob);
                    if (layer.weight_tensor.batch != ls.out_channels ||
                        layer.weight_tensor.channels != cur.channels ||
                        layer.weight_tensor.height != ls.kernel_h ||
                        layer.weight_tensor.width != ls.kernel_w)
                        chain_error(i, ls.kind,
                                    "weights blob shape does not match [D, C, kH, kW]");
                } else {
                    layer.weight_tensor = fill_random(ls.out_channels, cur.channels,
                                                      ls.kernel_h, ls.kernel_w, mix64(base, 1));
                }
                if (spec.binarize_weights) layer.weight_tensor = sign(std::move(layer.weight_tensor));
                layer.weights = flatten_weights(layer.weight_tensor);
                layer.packed_weights = pack_rows(sign(layer.weights));
                layer.bias = fill_random_vector(ls.out_channels, mix64(base, 2));
                net.parameter_count += layer.weights.data.size() + layer.bias.size();
                cur = {ls.out_channels, oh, ow, false};
                break;
            }
            case LayerKind::Linear: {
                if (ls.out_features == 0)
                    chain_error(i, ls.kind, "out_features is required");
                layer.in_features = cur.features();
                layer.out_features = ls.out_features;
                if (!ls.weights_blob.empty()) {
                    FloatTensor t = load_tensor_blob(ls.weights_blob);
                    if (t.batch != ls.out_features || t.channels != layer.in_features ||
                        t.height != 1 || t.width != 1)
                        chain_error(i, ls.kind,
                                    "weights blob shape does not match [out, in, 1, 1]");
                    layer.weights = FloatMatrix(ls.out_features, layer.in_features);
                    layer.weights.data = std::move(t.data);
                } else {
                    layer.weights =
                        fill_random_matrix(ls.out_features, layer.in_features, mix64(base, 1));
                }
                if (spec.binarize_weights) layer.weights = sign(std::move(layer.weights));
                layer.packed_weights = pack_rows(sign(layer.weights));
                layer.bias = fill_random_vector(ls.out_features, mix64(base, 2));
                net.parameter_count += layer.weights.data.size() + layer.bias.size();
                cur = {ls.out_features, 0, 0, true};
                break;
            }
            case LayerKind::MaxPool: {
                if (cur.flat) chain_error(i, ls.kind, "input is already flattened");
                if (cur.h % 2 != 0 || cur.w % 2 != 0)
                    chain_error(i, ls.kind, "spatial extents must be even, got " +
                                                std::to_string(cur.h) + "x" +
                                                std::to_string(cur.w));
                cur = {cur.channels, cur.h / 2, cur.w / 2, false};
                break;
            }
            case LayerKind::AffineNorm: {
                const std::size_t n = cur.channels;  // feature count once flat
                layer.scale = fill_random_vector(n, mix64(base, 3));
                for (float& s : layer.scale) s = 1.0f + 0.5f * s;  // in [0.5, 1.5)
                layer.shift = fill_random_vector(n, mix64(base, 4));
                net.parameter_count += 2 * n;
                break;
            }
            case LayerKind::SignAct:
            case LayerKind::HtanhAct:
                break;
        }
        layer.out_channels = cur.channels;
        layer.out_h = cur.h;
        layer.out_w = cur.w;
        layer.out_flat = cur.flat;
        net.layers.push_back(std::move(layer));
    }
    net.logits = cur.features();
    return net;
}

// ---------------------------------------------------------------- forward

namespace {

struct Value {
    FloatTensor t;
    FloatMatrix m;
    bool flat = false;
};

ExecKernel resolve_exec(ExecKernel opt, KernelChoice layer_kernel) {
    if (opt != ExecKernel::PerLayer) return opt;
    switch (layer_kernel) {
        case KernelChoice::Float: return ExecKernel::Float;
        case KernelChoice::Binary: return ExecKernel::Binary;
        case KernelChoice::Naive: return ExecKernel::Naive;
    }
    return ExecKernel::Float;
}

}  // namespace

FloatMatrix network_forward(const Network& net, const FloatTensor& x,
                            const ForwardOptions& opts) {
    if (x.channels != net.in_channels || x.height != net.in_h || x.width != net.in_w)
        throw ShapeError("network input is " + std::to_string(x.channels) + "x" +
                         std::to_string(x.height) + "x" + std::to_string(x.width) +
                         ", network expects " + std::to_string(net.in_channels) + "x" +
                         std::to_string(net.in_h) + "x" + std::to_string(net.in_w));
    if (opts.layer_seconds && opts.layer_seconds->size() != net.layers.size())
        opts.layer_seconds->assign(net.layers.size(), 0.0);

    using clock = std::chrono::steady_clock;
    Value v;
    v.t = x;

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const BuiltLayer& layer = net.layers[i];
        const auto t0 = opts.layer_seconds ? clock::now() : clock::time_point{};

        switch (layer.spec.kind) {
            case LayerKind::Conv: {
                switch (resolve_exec(opts.kernel, layer.spec.kernel)) {
                    case ExecKernel::Binary:
                        v.t = conv_forward_binary(v.t, layer.packed_weights, layer.bias,
                                                  layer.geom, opts.threads);
                        break;
                    case ExecKernel::BinaryReference:
                        v.t = conv_forward_binary_reference(v.t, sign(layer.weights),
                                                            layer.bias, layer.geom,
                                                            opts.threads);
                        break;
                    case ExecKernel::Naive:
                        v.t = conv_forward_naive(v.t, layer.weight_tensor, layer.bias,
                                                 layer.geom);
                        break;
                    default:
                        v.t = conv_forward_float(v.t, layer.weights, layer.bias, layer.geom,
                                                 opts.threads);
                }
                break;
            }
            case LayerKind::Linear: {
                if (!v.flat) {
                    v.m = flatten_to_columns(v.t);
                    v.flat = true;
                }
                switch (resolve_exec(opts.kernel, layer.spec.kernel)) {
                    case ExecKernel::Binary:
                        v.m = linear_forward_packed(v.m, layer.packed_weights, layer.bias,
                                                    opts.threads);
                        break;
                    case ExecKernel::BinaryReference:
                        v.m = linear_forward_binary_reference(v.m, sign(layer.weights),
                                                              layer.bias, opts.threads);
                        break;
                    default:
                        v.m = linear_forward(v.m, layer.weights, layer.bias,
                                             KernelChoice::Float, opts.threads);
                }
                break;
            }
            case LayerKind::MaxPool:
                v.t = maxpool2(v.t);
                break;
            case LayerKind::AffineNorm:
                if (v.flat)
                    v.m = affine_norm(std::move(v.m), layer.scale, layer.shift);
                else
                    v.t = affine_norm(std::move(v.t), layer.scale, layer.shift);
                break;
            case LayerKind::SignAct:
                if (v.flat)
                    v.m = sign(std::move(v.m));
                else
                    v.t = sign(std::move(v.t));
                break;
            case LayerKind::HtanhAct:
                if (v.flat)
                    v.m = htanh(std::move(v.m));
                else
                    v.t = htanh(std::move(v.t));
                break;
        }

        if (opts.layer_seconds)
            (*opts.layer_seconds)[i] +=
                std::chrono::duration<double>(clock::now() - t0).count();
    }

    if (!v.flat) v.m = flatten_to_columns(v.t);
    return std::move(v.m);
}

NetworkSpec build_default_network(KernelChoice kernel, std::uint64_t seed) {
    NetworkSpec spec;
    spec.name = "bnn-cifar10";
    spec.input_shape = {1, 3, 32, 32};
    spec.seed = seed;

    auto conv = [&](std::size_t d) {
        LayerSpec l;
        l.kind = LayerKind::Conv;
        l.out_channels = d;
        l.kernel_h = l.kernel_w = 3;
        l.pad_h = l.pad_w = 1;
        l.kernel = kernel;
        spec.layers.push_back(l);
    };
    auto push = [&](LayerKind k) {
        LayerSpec l;
        l.kind = k;
        spec.layers.push_back(l);
    };
    auto linear = [&](std::size_t f) {
        LayerSpec l;
        l.kind = LayerKind::Linear;
        l.out_features = f;
        l.kernel = kernel;
        spec.layers.push_back(l);
    };
    auto norm_act = [&] {
        push(LayerKind::AffineNorm);
        push(LayerKind::HtanhAct);
        push(LayerKind::SignAct);
    };

    conv(128); norm_act();
    conv(128); push(LayerKind::MaxPool); norm_act();
    conv(256); norm_act();
    conv(256); push(LayerKind::MaxPool); norm_act();
    conv(512); norm_act();
    conv(512); push(LayerKind::MaxPool); norm_act();
    linear(1024); norm_act();
    linear(1024); norm_act();
    linear(10);
    return spec;
}

// -------------------------------------------------------------- json format

namespace {

using nlohmann::json;

std::pair<std::size_t, std::size_t> pair_field(const json& j, const char* key,
                                               std::size_t fallback) {
    if (!j.contains(key)) return {fallback, fallback};
    const json& v = j.at(key);
    if (v.is_array()) {
        if (v.size() != 2) throw ConfigError(std::string(key) + " must be a scalar or [h, w]");
        return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
    }
    const auto s = v.get<std::size_t>();
    return {s, s};
}

}  // namespace

NetworkSpec load_network_spec(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open network spec: " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("parse error in " + path + ": " + e.what());
    }
    try {
        NetworkSpec spec;
        spec.name = j.value("name", "unnamed");
        if (j.contains("input_shape")) {
            const auto& shape = j.at("input_shape");
            if (!shape.is_array() || shape.size() != 4)
                throw ConfigError("input_shape must be [batch, channels, height, width]");
            for (int i = 0; i < 4; ++i) spec.input_shape[i] = shape[i].get<std::size_t>();
        }
        spec.seed = j.value("seed", std::uint64_t{1});
        spec.binarize_weights = j.value("binarize_weights", false);
        const KernelChoice default_kernel =
            parse_kernel_choice(j.value("kernel", std::string("float")));
        if (!j.contains("layers") || !j.at("layers").is_array())
            throw ConfigError("spec needs a 'layers' array");
        for (const json& lj : j.at("layers")) {
            LayerSpec l;
            l.kind = parse_layer_kind(lj.at("kind").get<std::string>());
            if (l.kind == LayerKind::Conv) {
                l.out_channels = lj.at("out_channels").get<std::size_t>();
                std::tie(l.kernel_h, l.kernel_w) = pair_field(lj, "kernel_size", 0);
                if (l.kernel_h == 0) throw ConfigError("conv layer needs kernel_size");
                std::tie(l.stride_h, l.stride_w) = pair_field(lj, "stride", 1);
                std::tie(l.pad_h, l.pad_w) = pair_field(lj, "pad", 0);
            } else if (l.kind == LayerKind::Linear) {
                l.out_features = lj.at("out_features").get<std::size_t>();
            }
            if (l.kind == LayerKind::Conv || l.kind == LayerKind::Linear) {
                l.kernel = lj.contains("kernel")
                               ? parse_kernel_choice(lj.at("kernel").get<std::string>())
                               : default_kernel;
                l.weights_blob = lj.value("weights_blob", std::string{});
            }
            if (lj.contains("seed")) l.seed = lj.at("seed").get<std::uint64_t>();
            spec.layers.push_back(l);
        }
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError("bad network spec " + path + ": " + e.what());
    }
}

void save_network_spec(const NetworkSpec& spec, const std::string& path) {
    json j;
    j["name"] = spec.name;
    j["input_shape"] = spec.input_shape;
    j["seed"] = spec.seed;
    j["binarize_weights"] = spec.binarize_weights;
    json layers = json::array();
    for (const LayerSpec& l : spec.layers) {
        json lj;
        lj["kind"] = to_string(l.kind);
        if (l.kind == LayerKind::Conv) {
            lj["out_channels"] = l.out_channels;
            lj["kernel_size"] = json::array({l.kernel_h, l.kernel_w});
            lj["stride"] = json::array({l.stride_h, l.stride_w});
            lj["pad"] = json::array({l.pad_h, l.pad_w});
        } else if (l.kind == LayerKind::Linear) {
            lj["out_features"] = l.out_features;
        }
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::Linear) {
            lj["kernel"] = to_string(l.kernel);
            if (!l.weights_blob.empty()) lj["weights_blob"] = l.weights_blob;
        }
        if (l.seed) lj["seed"] = *l.seed;
        layers.push_back(lj);
    }
    j["layers"] = std::move(layers);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << j.dump(2) << '\n';
}

}  // namespace bnn
