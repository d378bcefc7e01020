#pragma once

#include <iosfwd>

#include "bnn/network.hpp"

namespace bnn {

/// Max absolute logit deviation accepted when checking the xnor path
/// against the float reference.
constexpr double kVerifyTolerance = 1e-4;

struct BenchConfig {
    std::string spec_path;  // empty: built-in default network
    std::vector<KernelChoice> kernels{KernelChoice::Binary, KernelChoice::Float};
    std::size_t batch = 64;
    std::size_t iterations = 20;
    std::size_t warmup = 3;
    unsigned threads = 1;
    std::uint64_t seed = 1;
    std::string out_path;    // report file; empty: stdout only
    std::string input_blob;  // optional tensor blob instead of synthetic input
    bool layer_times = true;
};

struct KernelStats {
    KernelChoice kernel = KernelChoice::Binary;
    std::vector<double> samples_s;  // wall-clock seconds per timed iteration
    double median_s = 0, min_s = 0, mean_s = 0;
    std::vector<double> layer_seconds;  // totals over timed iterations; empty when disabled
    std::uint64_t logits_hash = 0;
};

struct SpeedupEntry {
    std::string baseline;  // slower kernel
    std::string target;    // faster kernel
    double ratio = 0;      // baseline median / target median
};

struct LayerMemory {
    std::size_t layer_index = 0;
    std::string label;
    std::size_t float_bytes = 0;
    std::size_t packed_bytes = 0;
};

struct BenchReport {
    std::string network_name;
    std::string spec_path;
    std::size_t batch = 0, iterations = 0, warmup = 0;
    unsigned threads = 1;
    std::uint64_t seed = 0;
    std::string environment;
    double timer_resolution_ns = 0;
    std::vector<KernelStats> kernels;
    std::vector<LayerMemory> weight_memory;
    std::size_t total_float_bytes = 0, total_packed_bytes = 0;
    std::vector<SpeedupEntry> speedups;
};

struct VerifySummary {
    std::string network_name;
    std::size_t batch = 0;
    std::size_t compared = 0;         // logit values compared
    double max_abs_deviation = 0;
    double tolerance = kVerifyTolerance;
    bool pass = false;
    bool pad_correction_exercised = false;  // some layer has L % 32 != 0
};

/// n odd -> the middle order statistic, n even -> mean of the two middle
/// order statistics.
double median(std::vector<double> samples);

std::uint64_t fnv1a_hash(const FloatMatrix& m);

/// Time network_forward for each configured kernel on the same network,
/// input, batch and thread count. Weight packing happens at build, outside
/// the timed region; each timed iteration covers the full forward graph.
BenchReport run_benchmark(const BenchConfig& cfg);

/// Binary-vs-reference equivalence on the configured network with
/// pre-binarized parameters.
VerifySummary run_verify(const BenchConfig& cfg);

/// Equivalence check on an already-built network (test hook: callers may
/// perturb packed weights first).
VerifySummary verify_network(const Network& net, const FloatTensor& input,
                             unsigned threads = 1);

void emit_report(const BenchReport& r, const std::string& path);
BenchReport parse_report(const std::string& path);
void print_report(const BenchReport& r, std::ostream& os);

}  // namespace bnn
