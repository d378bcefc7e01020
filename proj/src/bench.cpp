#include "bnn/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace bnn {

double median(std::vector<double> samples) {
    if (samples.empty()) return 0.0;
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    if (n % 2 == 1) return samples[n / 2];
    return 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

std::uint64_t fnv1a_hash(const FloatMatrix& m) {
    std::uint64_t h = 1469598103934665603ull;
    for (float f : m.data) {
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
        for (int i = 0; i < 4; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 1099511628211ull;
        }
    }
    return h;
}

namespace {

std::string describe_environment() {
    std::ostringstream os;
#if defined(__clang__)
    os << "clang " << __clang_major__ << "." << __clang_minor__;
#elif defined(__GNUC__)
    os << "gcc " << __GNUC__ << "." << __GNUC_MINOR__;
#else
    os << "unknown compiler";
#endif
#if defined(__x86_64__) || defined(_M_X64)
    os << ", x86-64";
#elif defined(__aarch64__)
    os << ", aarch64";
#endif
#if defined(__POPCNT__)
    os << ", hw popcnt";
#endif
    os << ", steady_clock timer";
    return os.str();
}

double timer_resolution_ns() {
    using period = std::chrono::steady_clock::period;
    return 1e9 * static_cast<double>(period::num) / static_cast<double>(period::den);
}

NetworkSpec load_or_default(const BenchConfig& cfg) {
    if (!cfg.spec_path.empty()) return load_network_spec(cfg.spec_path);
    return build_default_network(KernelChoice::Binary, cfg.seed);
}

FloatTensor make_input(const BenchConfig& cfg, const Network& net) {
    if (!cfg.input_blob.empty()) {
        FloatTensor t = load_tensor_blob(cfg.input_blob);
        if (t.channels != net.in_channels || t.height != net.in_h || t.width != net.in_w)
            throw ConfigError("input blob shape does not match the network input");
        return t;
    }
    if (cfg.batch == 0) throw ConfigError("batch must be >= 1");
    return fill_random(cfg.batch, net.in_channels, net.in_h, net.in_w,
                       mix64(cfg.seed, 0x696e707574));  // distinct stream from parameters
}

std::string layer_label(const BuiltLayer& l) {
    std::ostringstream os;
    os << to_string(l.spec.kind);
    if (l.spec.kind == LayerKind::Conv)
        os << " " << l.geom.in_channels << "->" << l.geom.out_channels << " "
           << l.geom.kernel_h << "x" << l.geom.kernel_w;
    else if (l.spec.kind == LayerKind::Linear)
        os << " " << l.in_features << "->" << l.out_features;
    return os.str();
}

ExecKernel to_exec(KernelChoice k) {
    switch (k) {
        case KernelChoice::Binary: return ExecKernel::Binary;
        case KernelChoice::Naive: return ExecKernel::Naive;
        case KernelChoice::Float: break;
    }
    return ExecKernel::Float;
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& cfg) {
    if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
    if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
    if (cfg.kernels.empty()) throw ConfigError("at least one kernel is required");

    const NetworkSpec spec = load_or_default(cfg);
    const Network net = build_network(spec);  // weights packed here, outside timing
    const FloatTensor input = make_input(cfg, net);

    BenchReport report;
    report.network_name = spec.name;
    report.spec_path = cfg.spec_path;
    report.batch = input.batch;
    report.iterations = cfg.iterations;
    report.warmup = cfg.warmup;
    report.threads = cfg.threads;
    report.seed = cfg.seed;
    report.environment = describe_environment();
    report.timer_resolution_ns = timer_resolution_ns();

    using clock = std::chrono::steady_clock;
    for (KernelChoice kernel : cfg.kernels) {
        KernelStats stats;
        stats.kernel = kernel;
        ForwardOptions warm_opts{to_exec(kernel), cfg.threads, nullptr};
        for (std::size_t i = 0; i < cfg.warmup; ++i) network_forward(net, input, warm_opts);

        std::vector<double> layer_acc;
        ForwardOptions opts{to_exec(kernel), cfg.threads,
                            cfg.layer_times ? &layer_acc : nullptr};
        FloatMatrix logits;
        for (std::size_t i = 0; i < cfg.iterations; ++i) {
            const auto t0 = clock::now();
            logits = network_forward(net, input, opts);
            stats.samples_s.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        }
        stats.median_s = median(stats.samples_s);
        stats.min_s = *std::min_element(stats.samples_s.begin(), stats.samples_s.end());
        double sum = 0;
        for (double s : stats.samples_s) sum += s;
        stats.mean_s = sum / static_cast<double>(stats.samples_s.size());
        stats.layer_seconds = std::move(layer_acc);
        stats.logits_hash = fnv1a_hash(logits);
        report.kernels.push_back(std::move(stats));
    }

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const BuiltLayer& l = net.layers[i];
        if (!l.has_weights()) continue;
        report.weight_memory.push_back(
            {i, layer_label(l), l.float_weight_bytes(), l.packed_weight_bytes()});
        report.total_float_bytes += l.float_weight_bytes();
        report.total_packed_bytes += l.packed_weight_bytes();
    }

    auto find_median = [&](KernelChoice k) -> const KernelStats* {
        for (const KernelStats& s : report.kernels)
            if (s.kernel == k) return &s;
        return nullptr;
    };
    const KernelStats* bin = find_median(KernelChoice::Binary);
    for (KernelChoice slow : {KernelChoice::Float, KernelChoice::Naive}) {
        const KernelStats* s = find_median(slow);
        if (bin && s && bin->median_s > 0)
            report.speedups.push_back(
                {to_string(slow), to_string(KernelChoice::Binary), s->median_s / bin->median_s});
    }
    return report;
}

VerifySummary verify_network(const Network& net, const FloatTensor& input, unsigned threads) {
    const FloatMatrix got =
        network_forward(net, input, ForwardOptions{ExecKernel::Binary, threads, nullptr});
    const FloatMatrix want = network_forward(
        net, input, ForwardOptions{ExecKernel::BinaryReference, threads, nullptr});

    VerifySummary s;
    s.network_name = net.spec.name;
    s.batch = input.batch;
    s.compared = got.data.size();
    for (std::size_t i = 0; i < got.data.size(); ++i)
        s.max_abs_deviation = std::max(
            s.max_abs_deviation,
            static_cast<double>(std::fabs(got.data[i] - want.data[i])));
    s.pass = s.max_abs_deviation <= s.tolerance;
    for (const BuiltLayer& l : net.layers)
        if (l.has_weights() && l.packed_weights.pad_bits_per_line != 0)
            s.pad_correction_exercised = true;
    return s;
}

VerifySummary run_verify(const BenchConfig& cfg) {
    NetworkSpec spec = load_or_default(cfg);
    spec.binarize_weights = true;
    const Network net = build_network(spec);
    const FloatTensor input = make_input(cfg, net);
    return verify_network(net, input, cfg.threads);
}

// ------------------------------------------------------------------ reports

namespace {

using nlohmann::json;

std::string hash_hex(std::uint64_t h) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t parse_hash_hex(const std::string& s) {
    return std::stoull(s, nullptr, 16);
}

}  // namespace

void emit_report(const BenchReport& r, const std::string& path) {
    json j;
    j["network"] = r.network_name;
    j["config"] = {{"spec", r.spec_path},         {"batch", r.batch},
                   {"iterations", r.iterations},  {"warmup", r.warmup},
                   {"threads", r.threads},        {"seed", r.seed}};
    j["environment"] = r.environment;
    j["timer_resolution_ns"] = r.timer_resolution_ns;
    json kernels = json::array();
    for (const KernelStats& s : r.kernels) {
        json k;
        k["kernel"] = to_string(s.kernel);
        k["median_s"] = s.median_s;
        k["min_s"] = s.min_s;
        k["mean_s"] = s.mean_s;
        k["samples_s"] = s.samples_s;
        k["layer_seconds"] = s.layer_seconds;
        k["logits_hash"] = hash_hex(s.logits_hash);
        kernels.push_back(std::move(k));
    }
    j["kernels"] = std::move(kernels);
    json mem = json::array();
    for (const LayerMemory& m : r.weight_memory)
        mem.push_back({{"layer", m.layer_index},
                       {"label", m.label},
                       {"float_bytes", m.float_bytes},
                       {"packed_bytes", m.packed_bytes}});
    j["weight_memory"] = {{"layers", std::move(mem)},
                          {"total_float_bytes", r.total_float_bytes},
                          {"total_packed_bytes", r.total_packed_bytes}};
    json sp = json::array();
    for (const SpeedupEntry& s : r.speedups)
        sp.push_back({{"baseline", s.baseline}, {"target", s.target}, {"ratio", s.ratio}});
    j["speedups"] = std::move(sp);

    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << j.dump(2) << '\n';
}

BenchReport parse_report(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("parse error in " + path + ": " + e.what());
    }
    BenchReport r;
    r.network_name = j.at("network").get<std::string>();
    const json& cfg = j.at("config");
    r.spec_path = cfg.at("spec").get<std::string>();
    r.batch = cfg.at("batch").get<std::size_t>();
    r.iterations = cfg.at("iterations").get<std::size_t>();
    r.warmup = cfg.at("warmup").get<std::size_t>();
    r.threads = cfg.at("threads").get<unsigned>();
    r.seed = cfg.at("seed").get<std::uint64_t>();
    r.environment = j.at("environment").get<std::string>();
    r.timer_resolution_ns = j.at("timer_resolution_ns").get<double>();
    for (const json& k : j.at("kernels")) {
        KernelStats s;
        s.kernel = parse_kernel_choice(k.at("kernel").get<std::string>());
        s.median_s = k.at("median_s").get<double>();
        s.min_s = k.at("min_s").get<double>();
        s.mean_s = k.at("mean_s").get<double>();
        s.samples_s = k.at("samples_s").get<std::vector<double>>();
        s.layer_seconds = k.at("layer_seconds").get<std::vector<double>>();
        s.logits_hash = parse_hash_hex(k.at("logits_hash").get<std::string>());
        r.kernels.push_back(std::move(s));
    }
    const json& mem = j.at("weight_memory");
    for (const json& m : mem.at("layers"))
        r.weight_memory.push_back({m.at("layer").get<std::size_t>(),
                                   m.at("label").get<std::string>(),
                                   m.at("float_bytes").get<std::size_t>(),
                                   m.at("packed_bytes").get<std::size_t>()});
    r.total_float_bytes = mem.at("total_float_bytes").get<std::size_t>();
    r.total_packed_bytes = mem.at("total_packed_bytes").get<std::size_t>();
    for (const json& s : j.at("speedups"))
        r.speedups.push_back({s.at("baseline").get<std::string>(),
                              s.at("target").get<std::string>(),
                              s.at("ratio").get<double>()});
    return r;
}

void print_report(const BenchReport& r, std::ostream& os) {
    char line[160];
    os << "network: " << r.network_name << "  batch " << r.batch << "  iterations "
       << r.iterations << " (+" << r.warmup << " warmup)  threads " << r.threads
       << "  seed " << r.seed << "\n";
    os << "environment: " << r.environment << " (resolution " << r.timer_resolution_ns
       << " ns)\n\n";
    os << "  kernel      median/batch        min       mean   logits\n";
    for (const KernelStats& s : r.kernels) {
        std::snprintf(line, sizeof(line), "  %-8s %11.4f s %9.4f s %9.4f s   %s\n",
                      to_string(s.kernel), s.median_s, s.min_s, s.mean_s,
                      hash_hex(s.logits_hash).c_str());
        os << line;
    }
    for (const SpeedupEntry& s : r.speedups) {
        std::snprintf(line, sizeof(line), "  speedup %s/%s: %.2fx\n", s.baseline.c_str(),
                      s.target.c_str(), s.ratio);
        os << line;
    }
    if (r.total_float_bytes > 0) {
        std::snprintf(line, sizeof(line),
                      "  weights: float %.2f MiB, packed %.2f MiB (packed/float %.4f)\n",
                      r.total_float_bytes / 1048576.0, r.total_packed_bytes / 1048576.0,
                      static_cast<double>(r.total_packed_bytes) /
                          static_cast<double>(r.total_float_bytes));
        os << line;
    }
    for (const KernelStats& s : r.kernels) {
        if (s.layer_seconds.empty()) continue;
        double total = 0;
        for (double v : s.layer_seconds) total += v;
        std::snprintf(line, sizeof(line),
                      "  %s per-layer total over %zu iterations: %.4f s\n",
                      to_string(s.kernel), r.iterations, total);
        os << line;
    }
}

}  // namespace bnn
