#pragma once

#include "bnn/tensor.hpp"

namespace bnn {

/// Lower one batch slice of x into a [K*K*C, outH*outW] patch matrix.
/// Column j = oh*outW + ow holds the receptive field of output position
/// (oh, ow); row r = (c*kH + h)*kW + w reads input element
/// (c, oh*strideH + h - padH, ow*strideW + w - padW), 0 outside bounds.
FloatMatrix im2col(const FloatTensor& x, std::size_t batch_index, const ConvGeometry& geom);

/// Adjoint of im2col: scatter-add every matrix element back to its source
/// coordinate. Positions covered by several patches receive the sum of
/// contributions; pad positions are dropped. Input extents are recovered
/// from the geometry and the output extents.
FloatTensor col2im(const FloatMatrix& m, const ConvGeometry& geom,
                   std::size_t out_h, std::size_t out_w);

/// Unflatten a [D, outH*outW] GEMM result into a [1, D, outH, outW] tensor.
FloatTensor reshape_output(const FloatMatrix& m, std::size_t out_h, std::size_t out_w);

/// Flatten [D, C, kH, kW] conv weights to [D, K*K*C] rows in the same
/// (c*kH + h)*kW + w order im2col uses for patch rows.
FloatMatrix flatten_weights(const FloatTensor& w);

}  // namespace bnn
