#include "bnn/kernels.hpp"

#include <functional>
#include <thread>

namespace bnn {

namespace {

// Partition [0, rows) into contiguous chunks, one worker per chunk. Each
// output row is written by exactly one worker.
void parallel_rows(std::size_t rows, unsigned threads,
                   const std::function<void(std::size_t, std::size_t)>& body) {
    if (threads <= 1 || rows < 2) {
        body(0, rows);
        return;
    }
    const unsigned n = static_cast<unsigned>(std::min<std::size_t>(threads, rows));
    std::vector<std::thread> pool;
    pool.reserve(n);
    const std::size_t chunk = (rows + n - 1) / n;
    for (unsigned t = 0; t < n; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(rows, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

FloatMatrix float_gemm(const FloatMatrix& w, const FloatMatrix& x, unsigned threads) {
    if (w.cols != x.rows)
        throw ShapeError("float_gemm: inner extents differ, " + std::to_string(w.cols) +
                         " vs " + std::to_string(x.rows));
    FloatMatrix out(w.rows, x.cols);
    const std::size_t inner = w.cols, n = x.cols;
    parallel_rows(w.rows, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            float* orow = out.row(i);
            const float* wrow = w.row(i);
            for (std::size_t k = 0; k < inner; ++k) {
                const float a = wrow[k];
                const float* xrow = x.row(k);
                for (std::size_t j = 0; j < n; ++j) orow[j] += a * xrow[j];
            }
        }
    });
    return out;
}

IntMatrix xnor_gemm(const PackedBitMatrix& w, const PackedBitMatrix& x,
                    std::size_t inner_len, unsigned threads) {
    if (w.orientation != PackOrientation::RowPacked)
        throw ShapeError("xnor_gemm: weight operand must be row-packed");
    if (x.orientation != PackOrientation::ColPacked)
        throw ShapeError("xnor_gemm: input operand must be column-packed");
    if (w.logical_cols != inner_len || x.logical_rows != inner_len)
        throw ShapeError("xnor_gemm: inner extents " + std::to_string(w.logical_cols) +
                         "/" + std::to_string(x.logical_rows) + " do not match L=" +
                         std::to_string(inner_len));
    if (w.words_per_line != x.words_per_line)
        throw ShapeError("xnor_gemm: words-per-line mismatch");
    const std::size_t wpl = w.words_per_line;
    // popcounts accumulate in 32 bits; fine while a line stays under 2^26 bits
    if (wpl * kWordBits > (1u << 26))
        throw ShapeError("xnor_gemm: reduction length exceeds the accumulator guard");
    const std::int32_t correction =
        static_cast<std::int32_t>(wpl * kWordBits) + static_cast<std::int32_t>(w.pad_bits_per_line);

    IntMatrix out(w.logical_rows, x.logical_cols);
    const std::size_t n = x.logical_cols;
    parallel_rows(w.logical_rows, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const std::uint32_t* wline = w.line(i);
            std::int32_t* orow = out.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const std::uint32_t* xline = x.line(j);
                std::uint32_t agree = 0;
                for (std::size_t k = 0; k < wpl; ++k)
                    agree += static_cast<std::uint32_t>(popcount32(~(wline[k] ^ xline[k])));
                orow[j] = static_cast<std::int32_t>(2 * agree) - correction;
            }
        }
    });
    return out;
}

FloatMatrix to_float(const IntMatrix& m) {
    FloatMatrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i)
        out.data[i] = static_cast<float>(m.data[i]);
    return out;
}

FloatMatrix bias_add(FloatMatrix a, std::span<const float> bias) {
    if (bias.size() != a.rows)
        throw ShapeError("bias_add: bias length " + std::to_string(bias.size()) +
                         " does not match " + std::to_string(a.rows) + " rows");
    for (std::size_t d = 0; d < a.rows; ++d) {
        float* row = a.row(d);
        const float b = bias[d];
        for (std::size_t j = 0; j < a.cols; ++j) row[j] += b;
    }
    return a;
}

FloatTensor naive_conv(const FloatTensor& x, std::size_t batch_index,
                       const FloatTensor& w, const ConvGeometry& geom) {
    if (batch_index >= x.batch)
        throw ShapeError("naive_conv: batch index out of range");
    if (w.batch != geom.out_channels || w.channels != geom.in_channels ||
        w.height != geom.kernel_h || w.width != geom.kernel_w)
        throw ShapeError("naive_conv: weight shape does not match geometry");
    if (x.channels != geom.in_channels)
        throw ShapeError("naive_conv: input channels do not match geometry");
    const auto [out_h, out_w] = output_dims(geom, x.height, x.width);

    FloatTensor out(1, geom.out_channels, out_h, out_w);
    for (std::size_t d = 0; d < geom.out_channels; ++d) {
        for (std::size_t oh = 0; oh < out_h; ++oh) {
            for (std::size_t ow = 0; ow < out_w; ++ow) {
                float acc = 0.0f;
                for (std::size_t kh = 0; kh < geom.kernel_h; ++kh) {
                    const std::ptrdiff_t ih =
                        static_cast<std::ptrdiff_t>(oh * geom.stride_h + kh) -
                        static_cast<std::ptrdiff_t>(geom.pad_h);
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(x.height)) continue;
                    for (std::size_t kw = 0; kw < geom.kernel_w; ++kw) {
                        const std::ptrdiff_t iw =
                            static_cast<std::ptrdiff_t>(ow * geom.stride_w + kw) -
                            static_cast<std::ptrdiff_t>(geom.pad_w);
                        if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(x.width)) continue;
                        for (std::size_t c = 0; c < geom.in_channels; ++c) {
                            acc += w.at(d, c, kh, kw) *
                                   x.at(batch_index, c, static_cast<std::size_t>(ih),
                                        static_cast<std::size_t>(iw));
                        }
                    }
                }
                out.at(0, d, oh, ow) = acc;
            }
        }
    }
    return out;
}

}  // namespace bnn
