#include "bnn/tensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace bnn {

namespace {

void check_extent(std::size_t v, const char* name) {
    if (v == 0) throw ShapeError(std::string("extent '") + name + "' must be >= 1");
}

}  // namespace

FloatTensor::FloatTensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
    : batch(n), channels(c), height(h), width(w) {
    check_extent(n, "batch");
    check_extent(c, "channels");
    check_extent(h, "height");
    check_extent(w, "width");
    data.assign(n * c * h * w, 0.0f);
}

FloatMatrix::FloatMatrix(std::size_t r, std::size_t c) : rows(r), cols(c) {
    check_extent(r, "rows");
    check_extent(c, "cols");
    data.assign(r * c, 0.0f);
}

PackedBitMatrix PackedBitMatrix::make(std::size_t rows, std::size_t cols, PackOrientation o) {
    check_extent(rows, "rows");
    check_extent(cols, "cols");
    PackedBitMatrix p;
    p.logical_rows = rows;
    p.logical_cols = cols;
    p.orientation = o;
    const std::size_t extent = p.packed_extent();
    p.words_per_line = (extent + kWordBits - 1) / kWordBits;
    p.pad_bits_per_line = p.words_per_line * kWordBits - extent;
    p.words.assign(p.words_per_line * p.lines(), 0u);
    return p;
}

std::pair<std::size_t, std::size_t> output_dims(const ConvGeometry& geom,
                                                std::size_t in_h, std::size_t in_w) {
    auto one_axis = [](std::size_t in, std::size_t k, std::size_t s, std::size_t p,
                       const char* axis) -> std::size_t {
        const std::size_t padded = in + 2 * p;
        if (padded < k)
            throw ShapeError(std::string("kernel larger than padded input along ") + axis);
        const std::size_t span = padded - k;
        if (span % s != 0)
            throw ShapeError(std::string("output ") + axis + " is not integral: (" +
                             std::to_string(in) + " + 2*" + std::to_string(p) + " - " +
                             std::to_string(k) + ") not divisible by stride " +
                             std::to_string(s));
        return span / s + 1;
    };
    return {one_axis(in_h, geom.kernel_h, geom.stride_h, geom.pad_h, "height"),
            one_axis(in_w, geom.kernel_w, geom.stride_w, geom.pad_w, "width")};
}

std::uint64_t mix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

float unit_random(std::uint64_t seed, std::uint64_t index) {
    // Top 24 bits -> [0,1) exactly representable in float32, then to [-1,1).
    const std::uint32_t top = static_cast<std::uint32_t>(mix64(seed, index) >> 40);
    return static_cast<float>(top) * 0x1.0p-23f - 1.0f;
}

FloatTensor fill_random(std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                        std::uint64_t seed) {
    FloatTensor t(n, c, h, w);
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = unit_random(seed, i);
    return t;
}

FloatMatrix fill_random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    FloatMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = unit_random(seed, i);
    return m;
}

std::vector<float> fill_random_vector(std::size_t len, std::uint64_t seed) {
    if (len == 0) throw ShapeError("extent 'length' must be >= 1");
    std::vector<float> v(len);
    for (std::size_t i = 0; i < len; ++i) v[i] = unit_random(seed, i);
    return v;
}

namespace {

void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32le(std::string& out, float f) {
    const std::uint32_t v = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

float get_f32le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return std::bit_cast<float>(v);
}

}  // namespace

void save_tensor_blob(const FloatTensor& t, const std::string& path) {
    std::string buf;
    buf.reserve(32 + 4 * t.data.size());
    put_u64le(buf, t.batch);
    put_u64le(buf, t.channels);
    put_u64le(buf, t.height);
    put_u64le(buf, t.width);
    for (float f : t.data) put_f32le(buf, f);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed: " + path);
}

FloatTensor load_tensor_blob(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (buf.size() < 32) throw IoError("tensor blob truncated: " + path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    const std::uint64_t n = get_u64le(p), c = get_u64le(p + 8), h = get_u64le(p + 16),
                        w = get_u64le(p + 24);
    FloatTensor t(n, c, h, w);
    if (buf.size() != 32 + 4 * t.data.size())
        throw IoError("tensor blob size mismatch: " + path);
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = get_f32le(p + 32 + 4 * i);
    return t;
}

}  // namespace bnn
