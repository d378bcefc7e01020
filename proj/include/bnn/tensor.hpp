#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bnn {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EncodingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense 4-D tensor (batch, channels, height, width), row-major, width fastest.
/// Immutable after construction by convention; concurrent reads are safe.
struct FloatTensor {
    std::size_t batch = 0, channels = 0, height = 0, width = 0;
    std::vector<float> data;

    FloatTensor() = default;
    FloatTensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w);

    std::size_t size() const { return data.size(); }

    std::size_t index(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return ((n * channels + c) * height + h) * width + w;
    }
    float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
        return data[index(n, c, h, w)];
    }
    float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data[index(n, c, h, w)];
    }
};

/// Dense 2-D matrix, row-major.
struct FloatMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<float> data;

    FloatMatrix() = default;
    FloatMatrix(std::size_t r, std::size_t c);

    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const float* row(std::size_t r) const { return data.data() + r * cols; }
    float* row(std::size_t r) { return data.data() + r * cols; }
};

enum class PackOrientation : std::uint8_t { RowPacked = 0, ColPacked = 1 };

constexpr std::size_t kWordBits = 32;

/// A logical {-1,+1} matrix stored one bit per entry in 32-bit words.
/// Encoding: bit 1 for +1, bit 0 for -1. Within a line, logical index
/// 32k+b maps to bit b (LSB-first) of word k. Pad bits past the logical
/// extent are always 0; the GEMM pad correction relies on that.
struct PackedBitMatrix {
    std::size_t logical_rows = 0, logical_cols = 0;
    PackOrientation orientation = PackOrientation::RowPacked;
    std::size_t words_per_line = 0;
    std::size_t pad_bits_per_line = 0;
    std::vector<std::uint32_t> words;

    static PackedBitMatrix make(std::size_t rows, std::size_t cols, PackOrientation o);

    // Row-packed: one line per row, packing columns. Col-packed: one line
    // per column, packing rows.
    std::size_t lines() const {
        return orientation == PackOrientation::RowPacked ? logical_rows : logical_cols;
    }
    std::size_t packed_extent() const {
        return orientation == PackOrientation::RowPacked ? logical_cols : logical_rows;
    }
    const std::uint32_t* line(std::size_t i) const { return words.data() + i * words_per_line; }
    std::uint32_t* line(std::size_t i) { return words.data() + i * words_per_line; }

    /// Mask of the pad bits within the last word of a line (0 when none).
    std::uint32_t pad_mask() const {
        if (pad_bits_per_line == 0) return 0;
        return ~std::uint32_t(0) << (kWordBits - pad_bits_per_line);
    }

    std::size_t byte_size() const { return words.size() * sizeof(std::uint32_t); }
};

/// Kernel/stride/padding descriptor for a conv layer.
struct ConvGeometry {
    std::size_t kernel_h = 1, kernel_w = 1;
    std::size_t stride_h = 1, stride_w = 1;
    std::size_t pad_h = 0, pad_w = 0;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;

    std::size_t patch_len() const { return kernel_h * kernel_w * in_channels; }
};

/// Spatial output extents for a conv over an inH x inW input. Rejects
/// geometries whose output extent is not integral, naming the axis.
std::pair<std::size_t, std::size_t> output_dims(const ConvGeometry& geom,
                                                std::size_t in_h, std::size_t in_w);

/// Counter-based splitmix64 mix of a seed and an element index.
std::uint64_t mix64(std::uint64_t seed, std::uint64_t counter);

/// Deterministic pseudo-random value in [-1, 1) for (seed, index); identical
/// across runs and platforms. This is the generator behind all synthetic
/// parameters and inputs, so changing it changes every reference blob.
float unit_random(std::uint64_t seed, std::uint64_t index);

FloatTensor fill_random(std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                        std::uint64_t seed);
FloatMatrix fill_random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);
std::vector<float> fill_random_vector(std::size_t len, std::uint64_t seed);

// Tensor blob file: header of four little-endian u64 extents (batch,
// channels, height, width) followed by float32 little-endian values in
// row-major order.
void save_tensor_blob(const FloatTensor& t, const std::string& path);
FloatTensor load_tensor_blob(const std::string& path);

}  // namespace bnn
