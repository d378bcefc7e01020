#pragma once

#include "bnn/tensor.hpp"

namespace bnn {

// Deterministic binarization: >= 0 maps to +1, < 0 maps to -1. Zero maps to
// +1 so every value has a bit encoding.
FloatTensor sign(FloatTensor x);
FloatMatrix sign(FloatMatrix x);

// Hard tanh: clamp to [-1, 1].
FloatTensor htanh(FloatTensor x);
FloatMatrix htanh(FloatMatrix x);

/// Pack a {-1,+1} matrix along rows: one line per row, columns become bits.
/// Shape [D, L] -> [D lines, ceil(L/32) words per line]. Throws EncodingError
/// on any entry that is not exactly +-1.
PackedBitMatrix pack_rows(const FloatMatrix& w);

/// Pack a {-1,+1} matrix along columns: one line per column, rows become
/// bits. Shape [L, N] -> [N lines, ceil(L/32) words per line].
PackedBitMatrix pack_cols(const FloatMatrix& x);

/// Inverse of the matching pack operation; pad bits are ignored.
FloatMatrix unpack(const PackedBitMatrix& p);

// Packed blob file: orientation byte (0 row-packed, 1 col-packed), two
// little-endian u64 logical extents, then words as little-endian u32,
// line-major.
void save_packed_blob(const PackedBitMatrix& p, const std::string& path);
PackedBitMatrix load_packed_blob(const std::string& path);

}  // namespace bnn
