#include <doctest.h>

#include "bnn/kernels.hpp"
#include "bnn/lowering.hpp"
#include "test_helpers.hpp"

using namespace bnn;

namespace {

// Independent patch-definition oracle: for output position (oh, ow), row
// (c*kH + h)*kW + w reads input (c, oh*s + h - p, ow*s + w - p), 0 outside.
FloatMatrix im2col_oracle(const FloatTensor& x, std::size_t b, const ConvGeometry& g) {
    const auto [out_h, out_w] = output_dims(g, x.height, x.width);
    FloatMatrix m(g.patch_len(), out_h * out_w);
    for (std::size_t oh = 0; oh < out_h; ++oh)
        for (std::size_t ow = 0; ow < out_w; ++ow)
            for (std::size_t c = 0; c < g.in_channels; ++c)
                for (std::size_t h = 0; h < g.kernel_h; ++h)
                    for (std::size_t w = 0; w < g.kernel_w; ++w) {
                        const long ih = long(oh * g.stride_h + h) - long(g.pad_h);
                        const long iw = long(ow * g.stride_w + w) - long(g.pad_w);
                        float v = 0.0f;
                        if (ih >= 0 && ih < long(x.height) && iw >= 0 && iw < long(x.width))
                            v = x.at(b, c, std::size_t(ih), std::size_t(iw));
                        m.at((c * g.kernel_h + h) * g.kernel_w + w, oh * out_w + ow) = v;
                    }
    return m;
}

// How many patches cover each input position, by direct enumeration.
std::vector<int> coverage_counts(const ConvGeometry& g, std::size_t in_h, std::size_t in_w) {
    const auto [out_h, out_w] = output_dims(g, in_h, in_w);
    std::vector<int> counts(in_h * in_w, 0);
    for (std::size_t oh = 0; oh < out_h; ++oh)
        for (std::size_t ow = 0; ow < out_w; ++ow)
            for (std::size_t h = 0; h < g.kernel_h; ++h)
                for (std::size_t w = 0; w < g.kernel_w; ++w) {
                    const long ih = long(oh * g.stride_h + h) - long(g.pad_h);
                    const long iw = long(ow * g.stride_w + w) - long(g.pad_w);
                    if (ih >= 0 && ih < long(in_h) && iw >= 0 && iw < long(in_w))
                        counts[std::size_t(ih) * in_w + std::size_t(iw)]++;
                }
    return counts;
}

double dot_double(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
    return s;
}

}  // namespace

TEST_CASE("im2col: 3x3 input, k=2, the four patch columns") {
    FloatTensor x(1, 1, 3, 3);
    for (int i = 0; i < 9; ++i) x.data[i] = float(i + 1);
    ConvGeometry g{2, 2, 1, 1, 0, 0, 1, 1};
    FloatMatrix m = im2col(x, 0, g);
    REQUIRE(m.rows == 4);
    REQUIRE(m.cols == 4);
    const float expect[4][4] = {{1, 2, 4, 5}, {2, 3, 5, 6}, {4, 5, 7, 8}, {5, 6, 8, 9}};
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t r = 0; r < 4; ++r)
            CHECK(m.at(r, j) == expect[j][r]);
}

TEST_CASE("im2col: 1x1 kernel is a reshape to [C, H*W]") {
    test::Rng rng(2);
    FloatTensor x = test::random_tensor(rng, 1, 3, 4, 5);
    ConvGeometry g{1, 1, 1, 1, 0, 0, 3, 1};
    FloatMatrix m = im2col(x, 0, g);
    REQUIRE(m.rows == 3);
    REQUIRE(m.cols == 20);
    CHECK(m.data == x.data);
}

TEST_CASE("im2col: CIFAR first-layer shape [27, 1024]") {
    FloatTensor x(1, 3, 32, 32);
    ConvGeometry g{3, 3, 1, 1, 1, 1, 3, 1};
    FloatMatrix m = im2col(x, 0, g);
    CHECK(m.rows == 27);
    CHECK(m.cols == 1024);
}

TEST_CASE("im2col matches the patch-definition oracle on random geometries") {
    test::Rng rng(77);
    for (int it = 0; it < 20; ++it) {
        const std::size_t c = rng.range(1, 4), k = rng.range(1, 3), s = rng.range(1, 2),
                          p = rng.range(0, 1);
        const std::size_t oh = rng.range(1, 5), ow = rng.range(1, 5);
        if ((oh - 1) * s + k <= 2 * p || (ow - 1) * s + k <= 2 * p) continue;
        const std::size_t in_h = (oh - 1) * s + k - 2 * p;
        const std::size_t in_w = (ow - 1) * s + k - 2 * p;
        ConvGeometry g{k, k, s, s, p, p, c, 1};
        FloatTensor x = test::random_tensor(rng, 2, c, in_h, in_w);
        const std::size_t b = rng.range(0, 1);
        FloatMatrix got = im2col(x, b, g);
        FloatMatrix want = im2col_oracle(x, b, g);
        CHECK(got.data == want.data);
    }
}

TEST_CASE("im2col: channel mismatch rejected") {
    FloatTensor x(1, 2, 4, 4);
    ConvGeometry g{2, 2, 1, 1, 0, 0, 3, 1};
    CHECK_THROWS_AS(im2col(x, 0, g), ShapeError);
}

TEST_CASE("col2im: non-overlapping patches reproduce the input exactly") {
    test::Rng rng(3);
    FloatTensor x = test::random_tensor(rng, 1, 2, 6, 6);
    ConvGeometry g{2, 2, 2, 2, 0, 0, 2, 1};  // k == s, p = 0
    auto [oh, ow] = output_dims(g, 6, 6);
    FloatTensor back = col2im(im2col(x, 0, g), g, oh, ow);
    CHECK(back.data == x.data);
}

TEST_CASE("col2im: overlap multiplicity on a 3x3 input with k=2, s=1") {
    FloatTensor x(1, 1, 3, 3);
    for (int i = 0; i < 9; ++i) x.data[i] = float(i + 1);
    ConvGeometry g{2, 2, 1, 1, 0, 0, 1, 1};
    FloatTensor back = col2im(im2col(x, 0, g), g, 2, 2);
    const std::vector<int> counts = coverage_counts(g, 3, 3);
    const int expect_counts[9] = {1, 2, 1, 2, 4, 2, 1, 2, 1};
    for (int i = 0; i < 9; ++i) {
        CHECK(counts[i] == expect_counts[i]);
        CHECK(back.data[i] == x.data[i] * float(counts[i]));
    }
}

TEST_CASE("col2im: zero matrix scatters to a zero tensor") {
    ConvGeometry g{3, 3, 1, 1, 1, 1, 2, 1};
    FloatMatrix m(g.patch_len(), 16);
    FloatTensor t = col2im(m, g, 4, 4);
    for (float v : t.data) CHECK(v == 0.0f);
}

TEST_CASE("col2im: row and column mismatches rejected") {
    ConvGeometry g{3, 3, 1, 1, 1, 1, 2, 1};
    FloatMatrix wrong_rows(g.patch_len() + 1, 16);
    CHECK_THROWS_AS(col2im(wrong_rows, g, 4, 4), ShapeError);
    FloatMatrix wrong_cols(g.patch_len(), 15);
    CHECK_THROWS_AS(col2im(wrong_cols, g, 4, 4), ShapeError);
}

TEST_CASE("reshape_output: row-major unflatten") {
    FloatMatrix m(1, 4);
    m.data = {1, 2, 3, 4};
    FloatTensor t = reshape_output(m, 2, 2);
    CHECK(t.at(0, 0, 0, 0) == 1);
    CHECK(t.at(0, 0, 0, 1) == 2);
    CHECK(t.at(0, 0, 1, 0) == 3);
    CHECK(t.at(0, 0, 1, 1) == 4);

    FloatMatrix m2(2, 1);
    m2.data = {5, 6};
    FloatTensor t2 = reshape_output(m2, 1, 1);
    CHECK(t2.channels == 2);
    CHECK(t2.at(0, 0, 0, 0) == 5);
    CHECK(t2.at(0, 1, 0, 0) == 6);

    CHECK_THROWS_AS(reshape_output(m, 3, 2), ShapeError);
}

TEST_CASE("reshape_output roundtrips with flattening") {
    test::Rng rng(9);
    FloatMatrix m = test::random_matrix(rng, 3, 12);
    FloatTensor t = reshape_output(m, 3, 4);
    CHECK(t.data == m.data);  // shared layout, flatten is the identity on storage
}

TEST_CASE("adjointness: <im2col(x), y> == <x, col2im(y)>") {
    test::Rng rng(31);
    for (int it = 0; it < 20; ++it) {
        const std::size_t c = rng.range(1, 3), k = rng.range(1, 3), s = rng.range(1, 2),
                          p = rng.range(0, 1);
        const std::size_t oh = rng.range(2, 6), ow = rng.range(2, 6);
        if ((oh - 1) * s + k <= 2 * p || (ow - 1) * s + k <= 2 * p) continue;
        const std::size_t in_h = (oh - 1) * s + k - 2 * p;
        const std::size_t in_w = (ow - 1) * s + k - 2 * p;
        ConvGeometry g{k, k, s, s, p, p, c, 1};
        FloatTensor x = test::random_tensor(rng, 1, c, in_h, in_w);
        FloatMatrix y = test::random_matrix(rng, g.patch_len(), oh * ow);

        const double lhs = dot_double(im2col(x, 0, g).data, y.data);
        const double rhs = dot_double(x.data, col2im(y, g, oh, ow).data);
        CHECK(test::close_rel(lhs, rhs, 1e-5));
    }
}

TEST_CASE("lowered GEMM equals the naive convolution") {
    test::Rng rng(55);
    for (int it = 0; it < 10; ++it) {
        const std::size_t c = rng.range(1, 3), d = rng.range(1, 4), k = rng.range(1, 3);
        const std::size_t s = rng.range(1, 2), p = rng.range(0, 1);
        const std::size_t oh = rng.range(2, 5), ow = rng.range(2, 5);
        if ((oh - 1) * s + k <= 2 * p || (ow - 1) * s + k <= 2 * p) continue;
        ConvGeometry g{k, k, s, s, p, p, c, d};
        FloatTensor x =
            test::random_tensor(rng, 1, c, (oh - 1) * s + k - 2 * p, (ow - 1) * s + k - 2 * p);
        FloatTensor w = test::random_tensor(rng, d, c, k, k);

        FloatTensor direct = naive_conv(x, 0, w, g);
        FloatTensor lowered =
            reshape_output(float_gemm(flatten_weights(w), im2col(x, 0, g)), oh, ow);
        CHECK(test::max_rel_dev(direct.data, lowered.data) <= 1e-4);
    }
}
