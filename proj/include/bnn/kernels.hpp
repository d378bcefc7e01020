#pragma once

#include <bit>
#include <cstdint>
#include <span>

#include "bnn/tensor.hpp"

namespace bnn {

/// Exact signed GEMM result of the binary path; entries lie in [-L, L] and
/// share the parity of L.
struct IntMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<std::int32_t> data;

    IntMatrix() = default;
    IntMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0) {}

    std::int32_t at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::int32_t& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

/// Portable bit-twiddling population count; reference for the native path.
constexpr int popcount32_portable(std::uint32_t x) noexcept {
    x = x - ((x >> 1) & 0x55555555u);
    x = (x & 0x33333333u) + ((x >> 2) & 0x33333333u);
    x = (x + (x >> 4)) & 0x0F0F0F0Fu;
    return static_cast<int>((x * 0x01010101u) >> 24);
}

/// Population count via the platform primitive when the target has one.
inline int popcount32(std::uint32_t x) noexcept { return std::popcount(x); }

/// Signed dot product of the 32 {-1,+1} values encoded in two words:
/// 2*popcount(~(w ^ x)) - 32.
inline int word_dot(std::uint32_t w, std::uint32_t x) noexcept {
    return 2 * popcount32(~(w ^ x)) - 32;
}

/// Control-group float GEMM: [D, L] x [L, N] -> [D, N], plain i-k-j loop
/// accumulation in float32, no blocking and no vendor library. Optional
/// row-parallel execution over output rows; threads = 1 stays serial.
FloatMatrix float_gemm(const FloatMatrix& w, const FloatMatrix& x, unsigned threads = 1);

/// Xnor-popcount GEMM on packed operands. w is row-packed [D, ceil(L/32)],
/// x is column-packed [ceil(L/32), N], inner_len is the logical reduction
/// length L. Each entry equals the exact +-1 dot product of length L:
///   a[i,j] = 2*sum_k popcount(~(w_ik ^ x_kj)) - 32*wordsPerLine - padBits
/// With both operands' pad bits zero, every pad position scores one xnor
/// hit per line pair, so subtracting padBits recovers the L-term product.
/// When L is a multiple of 32 the correction vanishes.
IntMatrix xnor_gemm(const PackedBitMatrix& w, const PackedBitMatrix& x,
                    std::size_t inner_len, unsigned threads = 1);

FloatMatrix to_float(const IntMatrix& m);

/// a[d, j] += bias[d] for all j.
FloatMatrix bias_add(FloatMatrix a, std::span<const float> bias);

/// Direct triple-loop convolution of one batch slice; the golden oracle,
/// written for clarity. Weights are [D, C, kH, kW] with D in the batch slot.
FloatTensor naive_conv(const FloatTensor& x, std::size_t batch_index,
                       const FloatTensor& w, const ConvGeometry& geom);

}  // namespace bnn
