// Benchmark and verification harness for the xnor-popcount inference kernel.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "bnn/bench.hpp"

namespace {

std::vector<bnn::KernelChoice> parse_kernels(const std::vector<std::string>& names) {
    std::vector<bnn::KernelChoice> out;
    for (const std::string& n : names) out.push_back(bnn::parse_kernel_choice(n));
    return out;
}

int do_bench(const bnn::BenchConfig& cfg) {
    bnn::BenchReport report = bnn::run_benchmark(cfg);
    bnn::print_report(report, std::cout);
    if (!cfg.out_path.empty()) {
        bnn::emit_report(report, cfg.out_path);
        std::cout << "report written to " << cfg.out_path << "\n";
    }
    return 0;
}

int do_verify(const bnn::BenchConfig& cfg) {
    bnn::VerifySummary s = bnn::run_verify(cfg);
    std::printf("network %s, batch %zu: %zu logits compared, max deviation %.3g "
                "(tolerance %.3g)%s\n",
                s.network_name.c_str(), s.batch, s.compared, s.max_abs_deviation,
                s.tolerance, s.pad_correction_exercised ? ", pad correction exercised" : "");
    std::printf("%s\n", s.pass ? "PASS" : "FAIL");
    return s.pass ? 0 : 1;
}

int do_pack(const bnn::BenchConfig& cfg, const std::string& out_dir) {
    bnn::NetworkSpec spec = cfg.spec_path.empty()
                                ? bnn::build_default_network(bnn::KernelChoice::Binary, cfg.seed)
                                : bnn::load_network_spec(cfg.spec_path);
    bnn::Network net = bnn::build_network(spec);
    std::filesystem::create_directories(out_dir);
    std::size_t written = 0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const bnn::BuiltLayer& l = net.layers[i];
        if (!l.has_weights()) continue;
        char name[64];
        std::snprintf(name, sizeof(name), "layer%02zu_%s.pbm", i,
                      bnn::to_string(l.spec.kind));
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        bnn::save_packed_blob(l.packed_weights, path);
        std::printf("%s  [%zu x %zu] -> %zu bytes\n", path.c_str(),
                    l.packed_weights.logical_rows, l.packed_weights.logical_cols,
                    l.packed_weights.byte_size());
        ++written;
    }
    std::printf("%zu packed weight blobs written to %s\n", written, out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xnor-popcount inference kernel benchmark"};
    app.require_subcommand(1);

    bnn::BenchConfig cfg;
    std::vector<std::string> kernel_names;
    std::string out_dir;
    bool no_layer_times = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--spec", cfg.spec_path, "network spec file (default: built-in)");
        sub->add_option("--threads", cfg.threads, "worker threads for the GEMM kernels");
        sub->add_option("--seed", cfg.seed, "seed for parameters and synthetic inputs");
    };

    CLI::App* bench = app.add_subcommand("bench", "time inference per kernel");
    add_common(bench);
    bench->add_option("--kernel", kernel_names,
                      "kernel to time: binary|float|naive (repeatable; default binary+float)");
    bench->add_option("--batch", cfg.batch, "batch size per iteration");
    bench->add_option("--iters", cfg.iterations, "timed iterations");
    bench->add_option("--warmup", cfg.warmup, "untimed warmup iterations");
    bench->add_option("--out", cfg.out_path, "write the report to this file");
    bench->add_option("--input", cfg.input_blob, "tensor blob to use as input");
    bench->add_flag("--no-layer-times", no_layer_times, "skip the per-layer breakdown");

    CLI::App* verify = app.add_subcommand(
        "verify", "check the binary kernel against the float reference");
    add_common(verify);
    verify->add_option("--batch", cfg.batch, "batch size for the comparison");
    verify->add_option("--input", cfg.input_blob, "tensor blob to use as input");

    CLI::App* pack = app.add_subcommand("pack", "export packed weight blobs");
    add_common(pack);
    pack->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // --help exits 0, parse errors map to config errors
    }

    try {
        if (app.got_subcommand(verify)) {
            if (!verify->count("--batch")) cfg.batch = 8;  // comparison runs the float path
            return do_verify(cfg);
        }
        if (app.got_subcommand(bench)) {
            if (!kernel_names.empty()) cfg.kernels = parse_kernels(kernel_names);
            cfg.layer_times = !no_layer_times;
            return do_bench(cfg);
        }
        return do_pack(cfg, out_dir);
    } catch (const bnn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const bnn::ShapeError& e) {
        std::cerr << "shape error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
