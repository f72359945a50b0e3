// mae — mixed sparse+linear attention kernels with a two-engine latency model.
//
// Subcommands:
//   verify     run the property suites (oracle | linear | partition | all)
//   bench      sweep kernels over an N x W grid, emit CSV rows
//   partition  print the latency table and minimax head split
//   run        execute a forward pass on GFT4 tensor files
//   calibrate  micro-benchmark both paths and write a profile JSON

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mae/bench.hpp"
#include "mae/io.hpp"
#include "mae/mixed_attention.hpp"
#include "mae/verify.hpp"

using nlohmann::json;

namespace {

struct CliOptions {
    std::size_t batch = 4;
    std::size_t heads = 16;
    std::size_t head_dim = 64;
    std::vector<std::size_t> seq_lens = {1024, 2048, 4096};
    std::vector<std::size_t> windows = {64, 128};
    double tau = -1.0;
    long long h0 = -1;
    std::string heads_mode = "causal"; // causal | self
    std::string feature_map = "elu";   // elu | orf
    std::size_t num_features = 0;
    std::uint64_t seed = 0;
    std::size_t repeats = 3;
    unsigned threads = 0;
    std::string precision = "f32";
    std::string mode = "exact";
    std::string out;
    std::string config_path;
    bool dry_run = false;

    // verify
    std::string suite = "all";
    bool inject_fault = false;

    // bench
    std::vector<std::string> kernels = {"DenseCausal", "Windowed"};

    // partition / run
    std::string profile = "gaudi-paper";
    std::string q_path, k_path, v_path;
    std::string run_kernel = "mixed";
    bool run_verify_mode = false;
};

// Flags override config-file values: only options the user did not pass on
// the command line are filled from JSON.
template <typename T>
void merge_json(const json& j, const char* key, const CLI::Option* opt, T& target) {
    if (opt != nullptr && opt->count() > 0) return;
    if (!j.contains(key)) return;
    target = j.at(key).get<T>();
}

void merge_json_list(const json& j, const char* key, const CLI::Option* opt,
                     std::vector<std::size_t>& target) {
    if (opt != nullptr && opt->count() > 0) return;
    if (!j.contains(key)) return;
    if (j.at(key).is_array()) {
        target = j.at(key).get<std::vector<std::size_t>>();
    } else {
        target = {j.at(key).get<std::size_t>()};
    }
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mae::ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw mae::ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw mae::ConfigError("config '" + path + "' must be a JSON object");
    return j;
}

mae::Precision parse_precision(const std::string& s) {
    if (s == "f32") return mae::Precision::F32;
    if (s == "f64") return mae::Precision::F64;
    throw mae::ConfigError("unknown precision '" + s + "' (expected f32|f64)");
}

mae::FeatureMapKind parse_feature_map(const std::string& s) {
    if (s == "elu") return mae::FeatureMapKind::EluPlusOne;
    if (s == "orf") return mae::FeatureMapKind::PositiveOrf;
    throw mae::ConfigError("unknown feature map '" + s + "' (expected elu|orf)");
}

bool parse_causal(const std::string& heads_mode) {
    if (heads_mode == "causal") return true;
    if (heads_mode == "self") return false;
    throw mae::ConfigError("unknown heads-mode '" + heads_mode + "' (expected causal|self)");
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// ---- verify --------------------------------------------------------------

int cmd_verify(const CliOptions& opt) {
    mae::set_thread_count(opt.threads);
    mae::set_verify_mode(true);

    mae::VerifyOptions vopt;
    vopt.seed = opt.seed == 0 ? 7 : opt.seed;
    vopt.inject_fault = opt.inject_fault;

    const std::vector<mae::CheckResult> results = mae::run_verify_suite(opt.suite, vopt);
    for (const mae::CheckResult& r : results) {
        std::printf("%s %s max_err=%.3e tol=%.3e\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.max_err, r.tolerance);
    }
    const bool ok = mae::all_passed(results);
    std::printf("%s: %zu checks, suite=%s seed=%llu\n", ok ? "OK" : "FAILED", results.size(),
                opt.suite.c_str(), static_cast<unsigned long long>(vopt.seed));

    if (!opt.out.empty()) {
        // report file holds only the deterministic pass/fail outcome
        std::ofstream rep(opt.out, std::ios::trunc);
        if (!rep) throw mae::ConfigError("cannot open report file '" + opt.out + "'");
        for (const mae::CheckResult& r : results) {
            rep << (r.pass ? "PASS " : "FAIL ") << r.name << "\n";
        }
    }
    return ok ? 0 : 1;
}

// ---- bench ----------------------------------------------------------------

bool kernel_uses_window(mae::KernelId k) {
    return k == mae::KernelId::Windowed || k == mae::KernelId::Mixed;
}

struct GridPoint {
    mae::KernelId kernel;
    std::size_t n;
    std::size_t w;
};

std::vector<GridPoint> build_grid(const CliOptions& opt) {
    std::vector<GridPoint> grid;
    for (std::size_t n : opt.seq_lens) {
        for (const std::string& name : opt.kernels) {
            const mae::KernelId k = mae::parse_kernel(name);
            if (kernel_uses_window(k)) {
                for (std::size_t w : opt.windows) grid.push_back({k, n, w});
            } else {
                grid.push_back({k, n, opt.windows.empty() ? 64 : opt.windows.front()});
            }
        }
    }
    return grid;
}

void open_csv_appendsafe(const std::string& path, std::ofstream& out) {
    namespace fs = std::filesystem;
    const bool exists = fs::exists(path) && fs::file_size(path) > 0;
    if (exists) {
        std::ifstream in(path);
        std::string first;
        std::getline(in, first);
        if (first != mae::kCsvHeader) {
            throw mae::ConfigError("'" + path + "' exists with a different CSV schema");
        }
        out.open(path, std::ios::app);
    } else {
        out.open(path, std::ios::trunc);
        if (out) out << mae::kCsvHeader << '\n';
    }
    if (!out) throw mae::ConfigError("cannot open CSV output '" + path + "'");
}

int cmd_bench(const CliOptions& opt) {
    mae::set_thread_count(opt.threads);
    const std::vector<GridPoint> grid = build_grid(opt);

    std::ostringstream kern_list;
    for (std::size_t i = 0; i < opt.kernels.size(); ++i) {
        kern_list << (i ? "," : "") << mae::kernel_name(mae::parse_kernel(opt.kernels[i]));
    }
    std::printf("grid: kernels=[%s] N=[", kern_list.str().c_str());
    for (std::size_t i = 0; i < opt.seq_lens.size(); ++i)
        std::printf("%s%zu", i ? "," : "", opt.seq_lens[i]);
    std::printf("] W=[");
    for (std::size_t i = 0; i < opt.windows.size(); ++i)
        std::printf("%s%zu", i ? "," : "", opt.windows[i]);
    std::printf("] B=%zu H=%zu E=%zu repeats=%zu threads=%u precision=%s mode=%s -> %zu points\n",
                opt.batch, opt.heads, opt.head_dim, opt.repeats, mae::effective_threads(),
                opt.precision.c_str(), opt.mode.c_str(), grid.size());
    if (opt.dry_run) {
        for (const GridPoint& p : grid) {
            std::printf("  point kernel=%s N=%zu W=%zu\n", mae::kernel_name(p.kernel), p.n, p.w);
        }
        return 0;
    }

    std::ofstream csv;
    if (!opt.out.empty()) open_csv_appendsafe(opt.out, csv);

    std::size_t refusals = 0;
    for (const GridPoint& p : grid) {
        mae::BenchRequest req;
        req.kernel = p.kernel;
        req.size = {opt.batch, p.n, opt.heads, opt.head_dim, p.w};
        req.mode = mae::parse_flops_mode(opt.mode);
        req.repeats = opt.repeats;
        req.seed = opt.seed;
        req.precision = parse_precision(opt.precision);
        req.feature_map = parse_feature_map(opt.feature_map);
        req.num_features = opt.num_features;
        req.causal = parse_causal(opt.heads_mode);
        if (opt.tau >= 0.0) req.tau = opt.tau;
        if (opt.h0 >= 0) req.tau = static_cast<double>(opt.h0) / static_cast<double>(opt.heads);

        try {
            const mae::BenchReport rep = mae::measure_kernel(req);
            std::printf("bench kernel=%s N=%zu W=%zu: min=%.6es median=%.6es flops=%llu rate=%.3e FLOP/s\n",
                        mae::kernel_name(p.kernel), p.n, p.w, rep.min_seconds(),
                        rep.median_seconds(), static_cast<unsigned long long>(rep.flops),
                        static_cast<double>(rep.flops) / rep.min_seconds());
            if (csv.is_open()) mae::write_csv(csv, rep);
        } catch (const mae::MemoryCapError& e) {
            ++refusals;
            std::fprintf(stderr, "refused kernel=%s N=%zu W=%zu: %s\n",
                         mae::kernel_name(p.kernel), p.n, p.w, e.what());
        }
    }
    if (refusals > 0) {
        std::fprintf(stderr, "%zu of %zu points refused by the memory cap\n", refusals,
                     grid.size());
    }
    return 0;
}

// ---- partition -------------------------------------------------------------

mae::PerfProfile load_profile(const std::string& name, mae::FlopsMode mode, std::size_t e) {
    if (name == "gaudi-paper") return mae::gaudi_paper_profile(mode, e);
    std::ifstream in(name);
    if (!in) throw mae::ConfigError("cannot open profile file '" + name + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& err) {
        throw mae::ConfigError("profile '" + name + "' is not valid JSON: " + err.what());
    }
    mae::PerfProfile p;
    p.perf0 = j.at("perf0").get<double>();
    p.perf1 = j.at("perf1").get<double>();
    p.flops_per0 = j.value("flops_per0", 0.0);
    p.flops_per1 = j.value("flops_per1", 8.0);
    p.source = j.value("source", name);
    p.validate();
    return p;
}

int cmd_partition(const CliOptions& opt) {
    const mae::FlopsMode mode = mae::parse_flops_mode(opt.mode);
    const mae::WorkloadSize size{opt.batch, opt.seq_lens.front(), opt.heads, opt.head_dim,
                                 opt.windows.front()};
    size.validate();
    const mae::PerfProfile profile = load_profile(opt.profile, mode, opt.head_dim);

    std::printf("profile: %s (perf0=%.6e FLOP/s, perf1=%.6e FLOP/s, flops_per0=%g, flops_per1=%g)\n",
                profile.source.c_str(), profile.perf0, profile.perf1, profile.flops_per0,
                profile.flops_per1);
    std::printf("size: B=%zu N=%zu H=%zu E=%zu W=%zu mode=%s\n", size.b, size.n, size.h, size.e,
                size.w, mae::flops_mode_name(mode));

    const mae::PartitionResult best = mae::optimal_partition(size, profile, mode);
    std::printf("  %3s %3s  %14s  %14s  %-8s\n", "h0", "h1", "latency0", "latency1", "bottleneck");
    for (std::size_t h0 = 0; h0 <= size.h; ++h0) {
        const mae::LatencyEstimate est =
            mae::estimate_latency(size, h0, size.h - h0, profile, mode);
        std::printf("%s %3zu %3zu  %.8e  %.8e  %-8s\n", h0 == best.h0 ? "*" : " ", h0,
                    size.h - h0, est.latency0, est.latency1, mae::bottleneck_name(est.bottleneck));
    }
    std::printf("optimal h0=%zu h1=%zu max_latency=%.8e s\n", best.h0, size.h - best.h0,
                best.estimate.max_latency());
    return 0;
}

// ---- run --------------------------------------------------------------------

template <typename T>
mae::Tensor4<T> run_forward(const CliOptions& opt, const mae::Tensor4<T>& q,
                            const mae::Tensor4<T>& k, const mae::Tensor4<T>& v) {
    const std::size_t heads = q.dims().h;
    const bool causal = parse_causal(opt.heads_mode);
    const mae::WindowConfig wcfg{opt.windows.front(), 64};

    const auto make_fmap = [&] {
        if (parse_feature_map(opt.feature_map) == mae::FeatureMapKind::PositiveOrf) {
            const std::size_t m = opt.num_features == 0 ? q.dims().e : opt.num_features;
            return mae::FeatureMapSpec<T>::positive_orf(m, q.dims().e, opt.seed);
        }
        return mae::FeatureMapSpec<T>::elu_plus_one();
    };

    if (opt.run_kernel == "mixed") {
        double tau = opt.tau;
        if (opt.h0 >= 0) tau = static_cast<double>(opt.h0) / static_cast<double>(heads);
        if (tau < 0.0) tau = 0.25;
        const auto cfg = opt.h0 >= 0
                             ? mae::PartitionConfig<T>::from_heads(
                                   heads, static_cast<std::size_t>(opt.h0), wcfg, make_fmap(),
                                   causal)
                             : mae::PartitionConfig<T>::from_tau(heads, tau, wcfg, make_fmap(),
                                                                 causal);
        return mae::mixed_attention_forward(q, k, v, cfg);
    }
    if (opt.run_kernel == "dense") return mae::softmax_attention(q, k, v, causal);
    if (opt.run_kernel == "windowed") {
        return causal ? mae::windowed_attention(q, k, v, wcfg)
                      : mae::windowed_attention_symmetric(q, k, v, wcfg);
    }
    const mae::FeatureMapSpec<T> fmap = make_fmap();
    const mae::Tensor4<T> qp = mae::apply_feature_map(q, fmap);
    const mae::Tensor4<T> kp = mae::apply_feature_map(k, fmap);
    if (opt.run_kernel == "linear-noncausal") return mae::linear_attention_noncausal(qp, kp, v);
    if (opt.run_kernel == "linear-recurrent") return mae::causal_linear_recurrent(qp, kp, v);
    if (opt.run_kernel == "linear-cumsum") return mae::causal_linear_cumsum(qp, kp, v);
    throw mae::ConfigError("unknown run kernel '" + opt.run_kernel + "'");
}

int cmd_run(const CliOptions& opt, bool precision_given) {
    mae::set_thread_count(opt.threads);
    mae::set_verify_mode(opt.run_verify_mode);

    const mae::AnyTensor qa = mae::read_gft4(opt.q_path);
    const mae::AnyTensor ka = mae::read_gft4(opt.k_path);
    const mae::AnyTensor va = mae::read_gft4(opt.v_path);

    const mae::Precision prec = mae::tensor_precision(qa);
    if (mae::tensor_precision(ka) != prec || mae::tensor_precision(va) != prec) {
        throw mae::ConfigError("mixed precisions across Q/K/V files are rejected");
    }
    if (precision_given && parse_precision(opt.precision) != prec) {
        throw mae::ConfigError(std::string("input files are ") + mae::precision_name(prec) +
                               " but --precision asked for " + opt.precision);
    }
    if (opt.out.empty()) throw mae::ConfigError("run needs --out <tensor file>");

    if (prec == mae::Precision::F32) {
        const auto& q = std::get<mae::Tensor4<float>>(qa);
        const auto& k = std::get<mae::Tensor4<float>>(ka);
        const auto& v = std::get<mae::Tensor4<float>>(va);
        mae::write_gft4(opt.out, run_forward<float>(opt, q, k, v));
    } else {
        const auto& q = std::get<mae::Tensor4<double>>(qa);
        const auto& k = std::get<mae::Tensor4<double>>(ka);
        const auto& v = std::get<mae::Tensor4<double>>(va);
        mae::write_gft4(opt.out, run_forward<double>(opt, q, k, v));
    }
    std::printf("checksum=%s\n", hex64(mae::fnv1a64_file(opt.out)).c_str());
    return 0;
}

// ---- calibrate ---------------------------------------------------------------

int cmd_calibrate(const CliOptions& opt) {
    mae::set_thread_count(opt.threads);
    const mae::FlopsMode mode = mae::parse_flops_mode(opt.mode);

    std::vector<mae::BenchReport> reports;
    std::printf("calibrating with B=%zu H=%zu E=%zu W=%zu repeats=%zu over N=[", opt.batch,
                opt.heads, opt.head_dim, opt.windows.front(), opt.repeats);
    for (std::size_t i = 0; i < opt.seq_lens.size(); ++i)
        std::printf("%s%zu", i ? "," : "", opt.seq_lens[i]);
    std::printf("]\n");

    for (std::size_t n : opt.seq_lens) {
        for (mae::KernelId kernel : {mae::KernelId::Windowed, mae::KernelId::LinearCausalRecurrent}) {
            mae::BenchRequest req;
            req.kernel = kernel;
            req.size = {opt.batch, n, opt.heads, opt.head_dim, opt.windows.front()};
            req.mode = mode;
            req.repeats = opt.repeats;
            req.seed = opt.seed;
            req.precision = parse_precision(opt.precision);
            const mae::BenchReport rep = mae::measure_kernel(req);
            std::printf("  %s N=%zu: min=%.6es flops=%llu\n", mae::kernel_name(kernel), n,
                        rep.min_seconds(), static_cast<unsigned long long>(rep.flops));
            reports.push_back(rep);
        }
    }

    const std::vector<mae::PathMeasurement> ms = mae::to_path_measurements(reports);
    const auto stamp = static_cast<unsigned long long>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    const mae::PerfProfile profile =
        mae::calibrate(ms, "run" + std::to_string(stamp), mode, opt.head_dim);

    std::printf("perf0=%.6e FLOP/s (sparse path)\nperf1=%.6e FLOP/s (linear path)\n",
                profile.perf0, profile.perf1);
    std::printf("  %-22s %8s %14s %14s %9s\n", "kernel", "path", "measured_s", "predicted_s",
                "rel_err");
    for (const mae::PathMeasurement& m : ms) {
        const double rate = m.path == 0 ? profile.perf0 : profile.perf1;
        const double predicted = m.flops / rate;
        std::printf("  %-22s %8d %14.6e %14.6e %8.1f%%\n", "", m.path, m.seconds, predicted,
                    100.0 * std::abs(predicted - m.seconds) / m.seconds);
    }

    const std::string out = opt.out.empty() ? "profile.json" : opt.out;
    json j{{"perf0", profile.perf0},
           {"perf1", profile.perf1},
           {"flops_per0", profile.flops_per0},
           {"flops_per1", profile.flops_per1},
           {"source", profile.source}};
    std::ofstream os(out, std::ios::trunc);
    if (!os) throw mae::ConfigError("cannot open profile output '" + out + "'");
    os << j.dump(2) << '\n';
    std::printf("profile written to %s\n", out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed sparse+linear attention kernels and latency model"};
    app.require_subcommand(1);

    CliOptions opt;

    const auto add_shared = [&](CLI::App* cmd) {
        cmd->add_option("--B", opt.batch, "batch size");
        cmd->add_option("--H", opt.heads, "total attention heads");
        cmd->add_option("--E", opt.head_dim, "per-head dimension");
        cmd->add_option("--N", opt.seq_lens, "sequence length(s)");
        cmd->add_option("--W", opt.windows, "window size(s), multiples of 64");
        cmd->add_option("--tau", opt.tau, "fraction of heads routed to the sparse path");
        cmd->add_option("--h0", opt.h0, "sparse head count (overrides --tau)");
        cmd->add_option("--heads-mode", opt.heads_mode, "attention pattern: causal|self");
        cmd->add_option("--feature-map", opt.feature_map, "linear-path feature map: elu|orf");
        cmd->add_option("--m", opt.num_features, "random feature count for orf");
        cmd->add_option("--seed", opt.seed, "RNG seed");
        cmd->add_option("--repeats", opt.repeats, "timed repetitions per point");
        cmd->add_option("--threads", opt.threads, "worker threads (0=auto, 1=pinned)");
        cmd->add_option("--precision", opt.precision, "f32|f64");
        cmd->add_option("--mode", opt.mode, "FLOPs model: paper|exact");
        cmd->add_option("--out", opt.out, "output path");
        cmd->add_option("--config", opt.config_path, "JSON config with flat flag keys");
        cmd->add_flag("--dry-run", opt.dry_run, "print the plan, write nothing");
    };

    CLI::App* verify = app.add_subcommand("verify", "run property suites");
    add_shared(verify);
    verify->add_option("--suite", opt.suite, "oracle|linear|partition|all");
    verify->add_flag("--inject-fault", opt.inject_fault, "fault-injection fixture")->group("");

    CLI::App* bench = app.add_subcommand("bench", "micro-benchmark sweep");
    add_shared(bench);
    bench->add_option("--kernels", opt.kernels, "kernel list");

    CLI::App* partition = app.add_subcommand("partition", "latency table and head split");
    add_shared(partition);
    partition->add_option("--profile", opt.profile, "gaudi-paper or a calibration JSON");

    CLI::App* run = app.add_subcommand("run", "forward pass over GFT4 files");
    add_shared(run);
    run->add_option("--q", opt.q_path, "query tensor file")->required();
    run->add_option("--k", opt.k_path, "key tensor file")->required();
    run->add_option("--v", opt.v_path, "value tensor file")->required();
    run->add_option("--kernel", opt.run_kernel,
                    "mixed|dense|windowed|linear-noncausal|linear-recurrent|linear-cumsum");
    run->add_flag("--verify", opt.run_verify_mode, "enable runtime invariant checks");

    CLI::App* calibrate = app.add_subcommand("calibrate", "measure both paths, write profile");
    add_shared(calibrate);

    try {
        app.parse(argc, argv);

        CLI::App* active = app.get_subcommands().front();
        if (!opt.config_path.empty()) {
            const json j = load_config(opt.config_path);
            merge_json(j, "B", active->get_option_no_throw("--B"), opt.batch);
            merge_json(j, "H", active->get_option_no_throw("--H"), opt.heads);
            merge_json(j, "E", active->get_option_no_throw("--E"), opt.head_dim);
            merge_json_list(j, "N", active->get_option_no_throw("--N"), opt.seq_lens);
            merge_json_list(j, "W", active->get_option_no_throw("--W"), opt.windows);
            merge_json(j, "tau", active->get_option_no_throw("--tau"), opt.tau);
            merge_json(j, "h0", active->get_option_no_throw("--h0"), opt.h0);
            merge_json(j, "heads-mode", active->get_option_no_throw("--heads-mode"),
                       opt.heads_mode);
            merge_json(j, "feature-map", active->get_option_no_throw("--feature-map"),
                       opt.feature_map);
            merge_json(j, "m", active->get_option_no_throw("--m"), opt.num_features);
            merge_json(j, "seed", active->get_option_no_throw("--seed"), opt.seed);
            merge_json(j, "repeats", active->get_option_no_throw("--repeats"), opt.repeats);
            merge_json(j, "threads", active->get_option_no_throw("--threads"), opt.threads);
            merge_json(j, "precision", active->get_option_no_throw("--precision"),
                       opt.precision);
            merge_json(j, "mode", active->get_option_no_throw("--mode"), opt.mode);
            merge_json(j, "out", active->get_option_no_throw("--out"), opt.out);
            merge_json(j, "suite", active->get_option_no_throw("--suite"), opt.suite);
            merge_json(j, "kernels", active->get_option_no_throw("--kernels"), opt.kernels);
            merge_json(j, "profile", active->get_option_no_throw("--profile"), opt.profile);
            merge_json(j, "kernel", active->get_option_no_throw("--kernel"), opt.run_kernel);
        }

        // reject invalid configs before any tensor allocation
        parse_precision(opt.precision);
        mae::parse_flops_mode(opt.mode);
        parse_causal(opt.heads_mode);
        parse_feature_map(opt.feature_map);
        if (opt.seq_lens.empty() || opt.windows.empty()) {
            throw mae::ConfigError("--N and --W must be nonempty");
        }
        for (std::size_t w : opt.windows) mae::WindowConfig{w, 64}.validate();
        if (opt.tau >= 0.0 && (opt.tau < 0.0 || opt.tau > 1.0)) {
            throw mae::ConfigError("--tau must lie in [0,1]");
        }
        if (opt.h0 >= 0 && static_cast<std::size_t>(opt.h0) > opt.heads) {
            throw mae::ConfigError("--h0 exceeds --H");
        }

        if (verify->parsed()) return cmd_verify(opt);
        if (bench->parsed()) return cmd_bench(opt);
        if (partition->parsed()) return cmd_partition(opt);
        if (run->parsed()) {
            const CLI::Option* p = run->get_option_no_throw("--precision");
            return cmd_run(opt, p != nullptr && p->count() > 0);
        }
        if (calibrate->parsed()) return cmd_calibrate(opt);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
