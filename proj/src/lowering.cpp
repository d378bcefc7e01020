#include "bnn/lowering.hpp"

#include <cstring>

namespace bnn {

FloatMatrix im2col(const FloatTensor& x, std::size_t batch_index, const ConvGeometry& geom) {
    if (x.channels != geom.in_channels)
        throw ShapeError("im2col: input has " + std::to_string(x.channels) +
                         " channels, geometry expects " + std::to_string(geom.in_channels));
    if (batch_index >= x.batch)
        throw ShapeError("im2col: batch index " + std::to_string(batch_index) +
                         " out of range " + std::to_string(x.batch));
    const auto [out_h, out_w] = output_dims(geom, x.height, x.width);
    FloatMatrix m(geom.patch_len(), out_h * out_w);

    const std::ptrdiff_t in_h = static_cast<std::ptrdiff_t>(x.height);
    const std::ptrdiff_t in_w = static_cast<std::ptrdiff_t>(x.width);
    for (std::size_t c = 0; c < geom.in_channels; ++c) {
        for (std::size_t kh = 0; kh < geom.kernel_h; ++kh) {
            for (std::size_t kw = 0; kw < geom.kernel_w; ++kw) {
                const std::size_t r = (c * geom.kernel_h + kh) * geom.kernel_w + kw;
                float* dst = m.row(r);
                for (std::size_t oh = 0; oh < out_h; ++oh) {
                    const std::ptrdiff_t ih =
                        static_cast<std::ptrdiff_t>(oh * geom.stride_h + kh) -
                        static_cast<std::ptrdiff_t>(geom.pad_h);
                    for (std::size_t ow = 0; ow < out_w; ++ow) {
                        const std::ptrdiff_t iw =
                            static_cast<std::ptrdiff_t>(ow * geom.stride_w + kw) -
                            static_cast<std::ptrdiff_t>(geom.pad_w);
                        const bool inside = ih >= 0 && ih < in_h && iw >= 0 && iw < in_w;
                        dst[oh * out_w + ow] =
                            inside ? x.at(batch_index, c, static_cast<std::size_t>(ih),
                                          static_cast<std::size_t>(iw))
                                   : 0.0f;
                    }
                }
            }
        }
    }
    return m;
}

FloatTensor col2im(const FloatMatrix& m, const ConvGeometry& geom,
                   std::size_t out_h, std::size_t out_w) {
    if (m.rows != geom.patch_len())
        throw ShapeError("col2im: matrix has " + std::to_string(m.rows) +
                         " rows, geometry expects " + std::to_string(geom.patch_len()));
    if (m.cols != out_h * out_w)
        throw ShapeError("col2im: matrix has " + std::to_string(m.cols) +
                         " columns, expected " + std::to_string(out_h * out_w));
    // The divisibility invariant makes the source extents unique.
    const std::size_t span_h = (out_h - 1) * geom.stride_h + geom.kernel_h;
    const std::size_t span_w = (out_w - 1) * geom.stride_w + geom.kernel_w;
    if (span_h <= 2 * geom.pad_h || span_w <= 2 * geom.pad_w)
        throw ShapeError("col2im: geometry implies an empty input");
    const std::size_t in_h = span_h - 2 * geom.pad_h;
    const std::size_t in_w = span_w - 2 * geom.pad_w;

    FloatTensor x(1, geom.in_channels, in_h, in_w);
    for (std::size_t c = 0; c < geom.in_channels; ++c) {
        for (std::size_t kh = 0; kh < geom.kernel_h; ++kh) {
            for (std::size_t kw = 0; kw < geom.kernel_w; ++kw) {
                const std::size_t r = (c * geom.kernel_h + kh) * geom.kernel_w + kw;
                const float* src = m.row(r);
                for (std::size_t oh = 0; oh < out_h; ++oh) {
                    const std::ptrdiff_t ih =
                        static_cast<std::ptrdiff_t>(oh * geom.stride_h + kh) -
                        static_cast<std::ptrdiff_t>(geom.pad_h);
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(in_h)) continue;
                    for (std::size_t ow = 0; ow < out_w; ++ow) {
                        const std::ptrdiff_t iw =
                            static_cast<std::ptrdiff_t>(ow * geom.stride_w + kw) -
                            static_cast<std::ptrdiff_t>(geom.pad_w);
                        if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(in_w)) continue;
                        x.at(0, c, static_cast<std::size_t>(ih), static_cast<std::size_t>(iw)) +=
                            src[oh * out_w + ow];
                    }
                }
            }
        }
    }
    return x;
}

FloatTensor reshape_output(const FloatMatrix& m, std::size_t out_h, std::size_t out_w) {
    if (m.cols != out_h * out_w)
        throw ShapeError("reshape_output: matrix has " + std::to_string(m.cols) +
                         " columns, expected " + std::to_string(out_h * out_w));
    // Row-major [D, outH*outW] and [D, outH, outW] share a memory layout.
    FloatTensor t(1, m.rows, out_h, out_w);
    std::memcpy(t.data.data(), m.data.data(), m.data.size() * sizeof(float));
    return t;
}

FloatMatrix flatten_weights(const FloatTensor& w) {
    // (d, c, h, w) row-major already matches row d, column (c*kH+h)*kW+w.
    FloatMatrix m(w.batch, w.channels * w.height * w.width);
    std::memcpy(m.data.data(), w.data.data(), w.data.size() * sizeof(float));
    return m;
}

}  // namespace bnn
