#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bnn/binarize.hpp"
#include "bnn/kernels.hpp"
#include "bnn/lowering.hpp"

namespace bnn {

enum class LayerKind { Conv, Linear, MaxPool, AffineNorm, SignAct, HtanhAct };
enum class KernelChoice { Float, Binary, Naive };

const char* to_string(LayerKind k);
const char* to_string(KernelChoice k);
LayerKind parse_layer_kind(const std::string& s);
KernelChoice parse_kernel_choice(const std::string& s);

/// One layer of a network description. Input extents are not stored; they
/// are resolved by chaining from the network input shape at build time.
struct LayerSpec {
    LayerKind kind = LayerKind::SignAct;
    // conv
    std::size_t out_channels = 0;
    std::size_t kernel_h = 0, kernel_w = 0;
    std::size_t stride_h = 1, stride_w = 1;
    std::size_t pad_h = 0, pad_w = 0;
    // linear
    std::size_t out_features = 0;
    // conv/linear
    KernelChoice kernel = KernelChoice::Float;
    std::optional<std::uint64_t> seed;
    std::string weights_blob;  // tensor blob path; empty -> seeded weights

    bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
    std::string name;
    std::array<std::size_t, 4> input_shape{1, 3, 32, 32};  // default batch, C, H, W
    std::uint64_t seed = 1;
    bool binarize_weights = false;  // apply sign to generated weights
    std::vector<LayerSpec> layers;

    bool operator==(const NetworkSpec&) const = default;
};

/// A layer with resolved shapes and materialized parameters. Weights exist
/// in both representations: the float matrix for the control path and the
/// row-packed sign bits for the binary path, packed once here so packing
/// never lands inside timed iterations.
struct BuiltLayer {
    LayerSpec spec;
    ConvGeometry geom;                              // conv
    std::size_t in_features = 0, out_features = 0;  // linear
    FloatTensor weight_tensor;                      // conv, [D, C, kH, kW]
    FloatMatrix weights;                            // conv [D, K2C] / linear [out, in]
    PackedBitMatrix packed_weights;                 // row-packed sign(weights)
    std::vector<float> bias;
    std::vector<float> scale, shift;  // affine_norm
    // output shape after this layer
    std::size_t out_channels = 0, out_h = 0, out_w = 0;
    bool out_flat = false;

    bool has_weights() const {
        return spec.kind == LayerKind::Conv || spec.kind == LayerKind::Linear;
    }
    std::size_t float_weight_bytes() const { return weights.data.size() * sizeof(float); }
    std::size_t packed_weight_bytes() const { return packed_weights.byte_size(); }
};

struct Network {
    NetworkSpec spec;
    std::vector<BuiltLayer> layers;
    std::size_t in_channels = 0, in_h = 0, in_w = 0;
    std::size_t logits = 0;
    std::size_t parameter_count = 0;
};

/// Validate the shape chain and materialize deterministic parameters.
/// Throws ShapeError with the layer index on any chain mismatch.
Network build_network(const NetworkSpec& spec);

/// How conv/linear layers execute during a forward pass. PerLayer follows
/// each layer's own kernel choice; BinaryReference runs the binarized graph
/// (sign after lowering, sign weights) through the float GEMM and is the
/// oracle the xnor path is verified against.
enum class ExecKernel { PerLayer, Float, Binary, Naive, BinaryReference };

struct ForwardOptions {
    ExecKernel kernel = ExecKernel::PerLayer;
    unsigned threads = 1;
    std::vector<double>* layer_seconds = nullptr;  // per-layer wall clock, accumulated
};

/// Run the network on a [batch, C, H, W] input; returns logits as a
/// [features, batch] matrix. Deterministic given (network, input).
FloatMatrix network_forward(const Network& net, const FloatTensor& x,
                            const ForwardOptions& opts = {});

/// The fixed benchmark architecture: six 3x3 conv layers (128/128p/256/256p/
/// 512/512p) followed by linear 1024, 1024, 10, with affine-norm, htanh and
/// sign between layers. Parameters derive from the seed.
NetworkSpec build_default_network(KernelChoice kernel, std::uint64_t seed);

NetworkSpec load_network_spec(const std::string& path);
void save_network_spec(const NetworkSpec& spec, const std::string& path);

// Layer-level forward operations. Conv variants loop over the batch
// internally and return [batch, D, outH, outW].
FloatTensor conv_forward_float(const FloatTensor& x, const FloatMatrix& w_flat,
                               std::span<const float> bias, const ConvGeometry& geom,
                               unsigned threads = 1);
FloatTensor conv_forward_binary(const FloatTensor& x, const PackedBitMatrix& packed_w,
                                std::span<const float> bias, const ConvGeometry& geom,
                                unsigned threads = 1);
/// Float-GEMM execution of the binarized graph: the lowered input goes
/// through sign before the multiply, exactly as the packed path sees it.
FloatTensor conv_forward_binary_reference(const FloatTensor& x, const FloatMatrix& w_pm1,
                                          std::span<const float> bias, const ConvGeometry& geom,
                                          unsigned threads = 1);
FloatTensor conv_forward_naive(const FloatTensor& x, const FloatTensor& w,
                               std::span<const float> bias, const ConvGeometry& geom);

/// x is [features, batch]; one column per batch element. The binary path
/// packs the weights on the fly; built networks use the prepacked variant.
FloatMatrix linear_forward(const FloatMatrix& x, const FloatMatrix& w,
                           std::span<const float> bias, KernelChoice kernel,
                           unsigned threads = 1);
FloatMatrix linear_forward_packed(const FloatMatrix& x, const PackedBitMatrix& packed_w,
                                  std::span<const float> bias, unsigned threads = 1);
FloatMatrix linear_forward_binary_reference(const FloatMatrix& x, const FloatMatrix& w_pm1,
                                            std::span<const float> bias, unsigned threads = 1);

/// 2x2 max pooling, stride 2. Requires even spatial extents.
FloatTensor maxpool2(const FloatTensor& x);

/// y[c] = scale[c] * x[c] + shift[c], per channel (tensor) or per row
/// feature (matrix).
FloatTensor affine_norm(FloatTensor x, std::span<const float> scale,
                        std::span<const float> shift);
FloatMatrix affine_norm(FloatMatrix x, std::span<const float> scale,
                        std::span<const float> shift);

/// Flatten [batch, C, H, W] to [C*H*W, batch], one column per element.
FloatMatrix flatten_to_columns(const FloatTensor& x);

}  // namespace bnn
