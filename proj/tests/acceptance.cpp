// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion carries its own tolerance and runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "bnn/bench.hpp"
#include "bnn/binarize.hpp"
#include "bnn/kernels.hpp"
#include "bnn/lowering.hpp"
#include "bnn/network.hpp"

using namespace bnn;

namespace {

struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    std::size_t range(std::size_t lo, std::size_t hi) { return lo + next() % (hi - lo + 1); }
    float uniform() { return float(next() >> 40) * 0x1.0p-23f - 1.0f; }
    float pm1() { return (next() & 1) ? 1.0f : -1.0f; }
};

FloatMatrix random_pm1(Rng& rng, std::size_t r, std::size_t c) {
    FloatMatrix m(r, c);
    for (float& v : m.data) v = rng.pm1();
    return m;
}

FloatMatrix random_mat(Rng& rng, std::size_t r, std::size_t c) {
    FloatMatrix m(r, c);
    for (float& v : m.data) v = rng.uniform();
    return m;
}

FloatTensor random_ten(Rng& rng, std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    FloatTensor t(n, c, h, w);
    for (float& v : t.data) v = rng.uniform();
    return t;
}

bool fail(std::string& detail, const std::string& msg) {
    detail = msg;
    return false;
}

// --------------------------------------------------------------- criteria

bool kernel_equivalence(std::string& detail) {
    Rng rng(101);
    const std::size_t lengths[] = {1, 31, 32, 33, 40, 64, 96, 100};
    int cases = 0;
    while (cases < 200) {
        const std::size_t L = lengths[rng.range(0, 7)];
        const std::size_t d = rng.range(1, 16), n = rng.range(1, 16);
        FloatMatrix w = random_pm1(rng, d, L);
        FloatMatrix x = random_pm1(rng, L, n);
        IntMatrix got = xnor_gemm(pack_rows(w), pack_cols(x), L);
        FloatMatrix want = float_gemm(w, x);
        for (std::size_t i = 0; i < got.data.size(); ++i)
            if (float(got.data[i]) != want.data[i])
                return fail(detail, "mismatch at L=" + std::to_string(L));
        ++cases;
    }
    detail = "200 cases, zero tolerance";
    return true;
}

bool truth_table(std::string& detail) {
    // encodings (0,0) (0,1) (1,0) (1,1) -> values (-1,-1) (-1,+1) (+1,-1)
    // (+1,+1) -> products +1 -1 -1 +1, replicated over all 32 lanes
    const std::uint32_t zero = 0x00000000u, one = 0xFFFFFFFFu;
    if (word_dot(zero, zero) != 32) return fail(detail, "(-1)*(-1) lane");
    if (word_dot(zero, one) != -32) return fail(detail, "(-1)*(+1) lane");
    if (word_dot(one, zero) != -32) return fail(detail, "(+1)*(-1) lane");
    if (word_dot(one, one) != 32) return fail(detail, "(+1)*(+1) lane");

    // the same four rows as single-bit dot products through the full path
    const float vals[2] = {-1.0f, 1.0f};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            FloatMatrix w(1, 1), x(1, 1);
            w.data[0] = vals[a];
            x.data[0] = vals[b];
            const std::int32_t got = xnor_gemm(pack_rows(w), pack_cols(x), 1).at(0, 0);
            if (float(got) != vals[a] * vals[b]) return fail(detail, "single-bit row");
        }
    detail = "4 corner pairs + 4 single-bit products";
    return true;
}

bool lowering_correctness(std::string& detail) {
    Rng rng(202);
    const std::size_t ks[] = {1, 2, 3, 5};
    int conv_cases = 0;
    while (conv_cases < 50) {
        const std::size_t k = ks[rng.range(0, 3)], s = rng.range(1, 2), p = rng.range(0, 1);
        const std::size_t oh = rng.range(2, 6), ow = rng.range(2, 6);
        if ((oh - 1) * s + k <= 2 * p || (ow - 1) * s + k <= 2 * p) continue;
        const std::size_t c = rng.range(1, 4), d = rng.range(1, 6);
        ConvGeometry g{k, k, s, s, p, p, c, d};
        FloatTensor x = random_ten(rng, 1, c, (oh - 1) * s + k - 2 * p, (ow - 1) * s + k - 2 * p);
        FloatTensor w = random_ten(rng, d, c, k, k);
        std::vector<float> bias(d);
        for (float& b : bias) b = rng.uniform();

        FloatTensor got = conv_forward_float(x, flatten_weights(w), bias, g);
        FloatTensor want = conv_forward_naive(x, w, bias, g);
        for (std::size_t i = 0; i < got.data.size(); ++i) {
            const double scale =
                std::max({1.0, std::fabs(double(got.data[i])), std::fabs(double(want.data[i]))});
            if (std::fabs(double(got.data[i]) - double(want.data[i])) > 1e-4 * scale)
                return fail(detail, "conv case " + std::to_string(conv_cases));
        }
        ++conv_cases;
    }

    int adjoint_cases = 0;
    while (adjoint_cases < 50) {
        const std::size_t k = rng.range(1, 3), s = rng.range(1, 2), p = rng.range(0, 1);
        const std::size_t oh = rng.range(2, 6), ow = rng.range(2, 6);
        if ((oh - 1) * s + k <= 2 * p || (ow - 1) * s + k <= 2 * p) continue;
        const std::size_t c = rng.range(1, 3);
        ConvGeometry g{k, k, s, s, p, p, c, 1};
        FloatTensor x = random_ten(rng, 1, c, (oh - 1) * s + k - 2 * p, (ow - 1) * s + k - 2 * p);
        FloatMatrix y = random_mat(rng, g.patch_len(), oh * ow);

        double lhs = 0, rhs = 0;
        FloatMatrix mx = im2col(x, 0, g);
        for (std::size_t i = 0; i < mx.data.size(); ++i)
            lhs += double(mx.data[i]) * double(y.data[i]);
        FloatTensor ty = col2im(y, g, oh, ow);
        for (std::size_t i = 0; i < ty.data.size(); ++i)
            rhs += double(x.data[i]) * double(ty.data[i]);
        const double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
        if (std::fabs(lhs - rhs) > 1e-5 * scale)
            return fail(detail, "adjoint case " + std::to_string(adjoint_cases));
        ++adjoint_cases;
    }
    detail = "50 conv geometries at 1e-4, 50 adjoint pairs at 1e-5";
    return true;
}

bool end_to_end_oracle(std::string& detail) {
    BenchConfig cfg;
    cfg.batch = 8;
    cfg.seed = 11;
    VerifySummary s = run_verify(cfg);
    if (!s.pass)
        return fail(detail, "default network deviates by " + std::to_string(s.max_abs_deviation));
    if (!s.pad_correction_exercised)
        return fail(detail, "no layer with a partial word in the default network");

    // a second topology with injected partial-word layers (L = 45 conv, 33
    // and 7 linear)
    NetworkSpec spec;
    spec.name = "pad-injected";
    spec.input_shape = {1, 5, 8, 8};
    spec.seed = 23;
    spec.binarize_weights = true;
    LayerSpec conv;
    conv.kind = LayerKind::Conv;
    conv.out_channels = 6;
    conv.kernel_h = conv.kernel_w = 3;
    conv.pad_h = conv.pad_w = 1;
    conv.kernel = KernelChoice::Binary;
    spec.layers.push_back(conv);
    LayerSpec act;
    act.kind = LayerKind::SignAct;
    spec.layers.push_back(act);
    LayerSpec lin1;
    lin1.kind = LayerKind::Linear;
    lin1.out_features = 33;
    lin1.kernel = KernelChoice::Binary;
    spec.layers.push_back(lin1);
    spec.layers.push_back(act);
    LayerSpec lin2 = lin1;
    lin2.out_features = 7;
    spec.layers.push_back(lin2);

    Network net = build_network(spec);
    VerifySummary s2 = verify_network(net, fill_random(4, 5, 8, 8, 29));
    if (!s2.pass)
        return fail(detail, "injected network deviates by " + std::to_string(s2.max_abs_deviation));
    detail = "default net max dev " + std::to_string(s.max_abs_deviation) +
             ", injected partial-word net max dev " + std::to_string(s2.max_abs_deviation) +
             ", tolerance 1e-4";
    return true;
}

bool speedup_scaled(std::string& detail) {
    BenchConfig cfg;
    cfg.batch = 64;
    cfg.threads = 1;
    cfg.iterations = 3;
    cfg.warmup = 1;
    cfg.seed = 5;
    cfg.kernels = {KernelChoice::Binary, KernelChoice::Float};
    BenchReport r = run_benchmark(cfg);
    double binary_s = 0, float_s = 0;
    for (const KernelStats& s : r.kernels) {
        if (s.kernel == KernelChoice::Binary) binary_s = s.median_s;
        if (s.kernel == KernelChoice::Float) float_s = s.median_s;
    }
    const double ratio = float_s / binary_s;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "binary %.3f s/batch, float %.3f s/batch, speedup %.2fx (need >= 2)",
                  binary_s, float_s, ratio);
    detail = buf;
    return ratio >= 2.0;
}

bool memory_compression(std::string& detail) {
    Network net = build_network(build_default_network(KernelChoice::Binary, 1));
    std::size_t checked = 0;
    for (const BuiltLayer& l : net.layers) {
        if (!l.has_weights()) continue;
        const std::size_t d = l.packed_weights.logical_rows;
        if (l.packed_weight_bytes() > l.float_weight_bytes() / 32 + 4 * d)
            return fail(detail, "layer " + std::to_string(checked) + " exceeds the bound");
        ++checked;
    }
    detail = std::to_string(checked) + " weighted layers within float/32 + 4*D bytes";
    return true;
}

bool roundtrip_hygiene(std::string& detail) {
    Rng rng(303);
    for (int it = 0; it < 1000; ++it) {
        const std::size_t rows = rng.range(1, 8), cols = rng.range(1, 70);
        FloatMatrix m = random_pm1(rng, rows, cols);
        PackedBitMatrix pr = pack_rows(m), pc = pack_cols(m);
        if (unpack(pr).data != m.data || unpack(pc).data != m.data)
            return fail(detail, "roundtrip failed at case " + std::to_string(it));
        for (const PackedBitMatrix& p : {pr, pc}) {
            const std::uint32_t mask = p.pad_mask();
            for (std::size_t li = 0; li < p.lines(); ++li)
                if ((p.line(li)[p.words_per_line - 1] & mask) != 0)
                    return fail(detail, "pad bits set at case " + std::to_string(it));
        }
        FloatMatrix f = random_mat(rng, rows, cols);
        FloatMatrix s = sign(f), h = htanh(f);
        if (sign(s).data != s.data) return fail(detail, "sign not idempotent");
        if (htanh(h).data != h.data) return fail(detail, "htanh not idempotent");
        for (float v : s.data)
            if (v != 1.0f && v != -1.0f) return fail(detail, "sign out of range");
    }
    detail = "1000 randomized cases";
    return true;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"kernel-equivalence-exact", 10, kernel_equivalence},
        {"truth-table", 10, truth_table},
        {"lowering-correctness", 30, lowering_correctness},
        {"end-to-end-oracle", 60, end_to_end_oracle},
        {"speedup-scaled", 300, speedup_scaled},
        {"memory-compression", 10, memory_compression},
        {"roundtrip-hygiene", 10, roundtrip_hygiene},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::string detail;
        bool ok = false;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > c.budget_s) {
            ok = false;
            detail += " [over budget " + std::to_string(c.budget_s) + " s]";
        }
        std::printf("[%s] %-26s %7.2f s  %s\n", ok ? "PASS" : "FAIL", c.name, elapsed,
                    detail.c_str());
        if (!ok) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
