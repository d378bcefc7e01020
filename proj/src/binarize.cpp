#include "bnn/binarize.hpp"

#include <fstream>

namespace bnn {

namespace {

inline float sign1(float v) { return v >= 0.0f ? 1.0f : -1.0f; }
inline float clamp1(float v) { return v > 1.0f ? 1.0f : (v < -1.0f ? -1.0f : v); }

[[noreturn]] void bad_entry(float v, std::size_t r, std::size_t c) {
    throw EncodingError("pack: entry at (" + std::to_string(r) + "," + std::to_string(c) +
                        ") is " + std::to_string(v) + ", expected -1 or +1");
}

}  // namespace

FloatTensor sign(FloatTensor x) {
    for (float& v : x.data) v = sign1(v);
    return x;
}

FloatMatrix sign(FloatMatrix x) {
    for (float& v : x.data) v = sign1(v);
    return x;
}

FloatTensor htanh(FloatTensor x) {
    for (float& v : x.data) v = clamp1(v);
    return x;
}

FloatMatrix htanh(FloatMatrix x) {
    for (float& v : x.data) v = clamp1(v);
    return x;
}

PackedBitMatrix pack_rows(const FloatMatrix& w) {
    PackedBitMatrix p = PackedBitMatrix::make(w.rows, w.cols, PackOrientation::RowPacked);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const float* src = w.row(i);
        std::uint32_t* line = p.line(i);
        for (std::size_t j = 0; j < w.cols; ++j) {
            const float v = src[j];
            if (v == 1.0f)
                line[j >> 5] |= 1u << (j & 31u);
            else if (v != -1.0f)
                bad_entry(v, i, j);
        }
    }
    return p;
}

PackedBitMatrix pack_cols(const FloatMatrix& x) {
    PackedBitMatrix p = PackedBitMatrix::make(x.rows, x.cols, PackOrientation::ColPacked);
    // Row-outer walk keeps the float reads contiguous; the word writes for
    // row r all land in word r/32 of each line.
    for (std::size_t r = 0; r < x.rows; ++r) {
        const float* src = x.row(r);
        const std::size_t word = r >> 5;
        const std::uint32_t bit = 1u << (r & 31u);
        std::uint32_t* words = p.words.data() + word;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const float v = src[j];
            if (v == 1.0f)
                words[j * p.words_per_line] |= bit;
            else if (v != -1.0f)
                bad_entry(v, r, j);
        }
    }
    return p;
}

FloatMatrix unpack(const PackedBitMatrix& p) {
    FloatMatrix m(p.logical_rows, p.logical_cols);
    const bool row_packed = p.orientation == PackOrientation::RowPacked;
    for (std::size_t li = 0; li < p.lines(); ++li) {
        const std::uint32_t* line = p.line(li);
        for (std::size_t b = 0; b < p.packed_extent(); ++b) {
            const bool set = (line[b >> 5] >> (b & 31u)) & 1u;
            const float v = set ? 1.0f : -1.0f;
            if (row_packed)
                m.at(li, b) = v;
            else
                m.at(b, li) = v;
        }
    }
    return m;
}

namespace {

void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

std::uint32_t get_u32le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

void save_packed_blob(const PackedBitMatrix& p, const std::string& path) {
    std::string buf;
    buf.reserve(17 + 4 * p.words.size());
    buf.push_back(static_cast<char>(p.orientation));
    put_u64le(buf, p.logical_rows);
    put_u64le(buf, p.logical_cols);
    for (std::uint32_t w : p.words) put_u32le(buf, w);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed: " + path);
}

PackedBitMatrix load_packed_blob(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (buf.size() < 17) throw IoError("packed blob truncated: " + path);
    const auto* raw = reinterpret_cast<const unsigned char*>(buf.data());
    const std::uint8_t ob = raw[0];
    if (ob > 1) throw IoError("packed blob has bad orientation byte: " + path);
    const std::uint64_t rows = get_u64le(raw + 1), cols = get_u64le(raw + 9);
    PackedBitMatrix p = PackedBitMatrix::make(rows, cols, static_cast<PackOrientation>(ob));
    if (buf.size() != 17 + 4 * p.words.size())
        throw IoError("packed blob size mismatch: " + path);
    for (std::size_t i = 0; i < p.words.size(); ++i) p.words[i] = get_u32le(raw + 17 + 4 * i);
    const std::uint32_t mask = p.pad_mask();
    if (mask)
        for (std::size_t li = 0; li < p.lines(); ++li)
            if (p.line(li)[p.words_per_line - 1] & mask)
                throw IoError("packed blob has nonzero pad bits: " + path);
    return p;
}

}  // namespace bnn
