#include "mae/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <ostream>

#include "mae/mixed_attention.hpp"
#include "mae/random.hpp"

namespace mae {

const char* kernel_name(KernelId k) {
    switch (k) {
        case KernelId::DenseCausal: return "DenseCausal";
        case KernelId::Windowed: return "Windowed";
        case KernelId::LinearNoncausal: return "LinearNoncausal";
        case KernelId::LinearCausalRecurrent: return "LinearCausalRecurrent";
        case KernelId::LinearCausalCumsum: return "LinearCausalCumsum";
        case KernelId::OuterProductBatch: return "OuterProductBatch";
        case KernelId::Mixed: return "Mixed";
    }
    return "?";
}

KernelId parse_kernel(const std::string& name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "densecausal" || lower == "dense") return KernelId::DenseCausal;
    if (lower == "windowed" || lower == "window") return KernelId::Windowed;
    if (lower == "linearnoncausal") return KernelId::LinearNoncausal;
    if (lower == "linearcausalrecurrent" || lower == "linearrecurrent")
        return KernelId::LinearCausalRecurrent;
    if (lower == "linearcausalcumsum" || lower == "linearcumsum")
        return KernelId::LinearCausalCumsum;
    if (lower == "outerproductbatch" || lower == "outer") return KernelId::OuterProductBatch;
    if (lower == "mixed") return KernelId::Mixed;
    throw ConfigError("unknown kernel '" + name + "'");
}

int kernel_path(KernelId k) {
    switch (k) {
        case KernelId::Windowed: return 0;
        case KernelId::LinearNoncausal:
        case KernelId::LinearCausalRecurrent:
        case KernelId::LinearCausalCumsum:
        case KernelId::OuterProductBatch: return 1;
        default: return -1;
    }
}

double BenchReport::min_seconds() const {
    return *std::min_element(seconds.begin(), seconds.end());
}

double BenchReport::median_seconds() const {
    std::vector<double> s(seconds);
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double BenchReport::mean_seconds() const {
    double sum = 0.0;
    for (double v : seconds) sum += v;
    return sum / static_cast<double>(seconds.size());
}

std::uint64_t kernel_flops(KernelId kernel, const WorkloadSize& size, FlopsMode mode,
                           std::size_t h0, std::size_t h1, std::size_t feature_dim) {
    const std::uint64_t bh = static_cast<std::uint64_t>(size.b) * size.h;
    switch (kernel) {
        case KernelId::DenseCausal: {
            // causal triangle: scores 2E, softmax 3, probs.V 2E per live pair
            const std::uint64_t pairs = static_cast<std::uint64_t>(size.n) * (size.n + 1) / 2;
            return bh * pairs * (4ull * size.e + 3ull);
        }
        case KernelId::Windowed:
            return flops_sparse(size, size.h, mode);
        case KernelId::LinearNoncausal:
        case KernelId::LinearCausalRecurrent:
        case KernelId::LinearCausalCumsum:
            return flops_linear(size, size.h);
        case KernelId::OuterProductBatch:
            return bh * size.n * feature_dim * size.e;
        case KernelId::Mixed:
            return flops_sparse(size, h0, mode) + flops_linear(size, h1);
    }
    return 0;
}

std::uint64_t memory_cap_bytes() {
    if (const char* env = std::getenv("MAE_MEM_CAP_BYTES")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && v > 0) return v;
    }
    return 4ull << 30;
}

namespace {

std::size_t request_feature_dim(const BenchRequest& req) {
    if (req.feature_map == FeatureMapKind::PositiveOrf && req.num_features > 0) {
        return req.num_features;
    }
    return req.size.e;
}

} // namespace

std::uint64_t estimate_bytes(const BenchRequest& req) {
    const std::uint64_t s = req.precision == Precision::F32 ? 4 : 8;
    const WorkloadSize& z = req.size;
    const std::uint64_t bh = static_cast<std::uint64_t>(z.b) * z.h;
    const std::uint64_t bhne = bh * z.n * z.e;
    const std::uint64_t m = request_feature_dim(req);
    const std::uint64_t workers = effective_threads();

    const std::uint64_t inputs = 3 * bhne * s;
    const std::uint64_t output = bhne * s;
    switch (req.kernel) {
        case KernelId::DenseCausal:
            return inputs + output + workers * z.n * s;
        case KernelId::Windowed:
            return inputs + output + 2 * bh * z.n * z.w * s;
        case KernelId::LinearNoncausal:
        case KernelId::LinearCausalRecurrent:
            return inputs + output + 2 * bh * z.n * m * s + workers * m * (z.e + 1) * s;
        case KernelId::LinearCausalCumsum:
            return inputs + output + 2 * bh * z.n * m * s + workers * z.n * m * (z.e + 1) * s;
        case KernelId::OuterProductBatch:
            return inputs + bh * z.n * m * s + bh * z.n * m * z.e * s;
        case KernelId::Mixed: {
            const std::size_t h0 = PartitionConfig<float>::heads_from_tau(z.h, req.tau);
            const std::size_t h1 = z.h - h0;
            const std::uint64_t sparse =
                2 * static_cast<std::uint64_t>(z.b) * h0 * z.n * z.w * s;
            const std::uint64_t linear =
                2 * static_cast<std::uint64_t>(z.b) * h1 * z.n * m * s +
                workers * m * (z.e + 1) * s;
            return inputs + 2 * output + sparse + linear;
        }
    }
    return inputs + output;
}

std::uint64_t fnv1a64_bytes(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

template <typename T>
BenchReport measure_impl(const BenchRequest& req) {
    req.size.validate();
    if (req.repeats < 3) {
        throw ConfigError("measure_kernel needs repeats >= 3, got " +
                          std::to_string(req.repeats));
    }
    const std::uint64_t need = estimate_bytes(req);
    const std::uint64_t cap = memory_cap_bytes();
    if (need > cap) {
        throw MemoryCapError(std::string(kernel_name(req.kernel)) + " at B=" +
                                 std::to_string(req.size.b) + " H=" + std::to_string(req.size.h) +
                                 " N=" + std::to_string(req.size.n) + " E=" +
                                 std::to_string(req.size.e) + " needs ~" + std::to_string(need) +
                                 " bytes, cap is " + std::to_string(cap),
                             need, cap);
    }

    const WindowConfig wcfg{req.size.w, 64};
    if (req.kernel == KernelId::Windowed || req.kernel == KernelId::Mixed) wcfg.validate();

    const Dims4 dims{req.size.b, req.size.h, req.size.n, req.size.e};
    const Tensor4<T> q = random_uniform_tensor<T>(dims, req.seed);
    const Tensor4<T> k = random_uniform_tensor<T>(dims, req.seed + 1);
    const Tensor4<T> v = random_uniform_tensor<T>(dims, req.seed + 2);

    FeatureMapSpec<T> fmap = req.feature_map == FeatureMapKind::PositiveOrf
                                 ? FeatureMapSpec<T>::positive_orf(request_feature_dim(req),
                                                                   req.size.e, req.seed + 3)
                                 : FeatureMapSpec<T>::elu_plus_one();

    BenchReport report;
    report.kernel = req.kernel;
    report.mode = req.mode;
    report.size = req.size;
    report.seed = req.seed;
    report.precision = req.precision;
    report.threads = effective_threads();
    report.multithreaded = report.threads > 1;

    std::size_t h0 = 0;
    std::size_t h1 = 0;
    Tensor4<T> kp_prepared; // OuterProductBatch input, mapped outside the timed region
    std::function<std::uint64_t()> run;

    switch (req.kernel) {
        case KernelId::DenseCausal:
            run = [&] {
                const Tensor4<T> out = softmax_attention(q, k, v, true);
                return fnv1a64_bytes(out.data(), out.size() * sizeof(T));
            };
            break;
        case KernelId::Windowed:
            h0 = req.size.h;
            run = [&] {
                const Tensor4<T> out = windowed_attention(q, k, v, wcfg);
                return fnv1a64_bytes(out.data(), out.size() * sizeof(T));
            };
            break;
        case KernelId::LinearNoncausal:
            h1 = req.size.h;
            // feature mapping is part of the linear path's accounting, so it
            // stays inside the timed region
            run = [&] {
                const Tensor4<T> qp = apply_feature_map(q, fmap);
                const Tensor4<T> kp = apply_feature_map(k, fmap);
                const Tensor4<T> out = linear_attention_noncausal(qp, kp, v);
                return fnv1a64_bytes(out.data(), out.size() * sizeof(T));
            };
            break;
        case KernelId::LinearCausalRecurrent:
            h1 = req.size.h;
            run = [&] {
                const Tensor4<T> qp = apply_feature_map(q, fmap);
                const Tensor4<T> kp = apply_feature_map(k, fmap);
                const Tensor4<T> out = causal_linear_recurrent(qp, kp, v);
                return fnv1a64_bytes(out.data(), out.size() * sizeof(T));
            };
            break;
        case KernelId::LinearCausalCumsum:
            h1 = req.size.h;
            run = [&] {
                const Tensor4<T> qp = apply_feature_map(q, fmap);
                const Tensor4<T> kp = apply_feature_map(k, fmap);
                const Tensor4<T> out = causal_linear_cumsum(qp, kp, v);
                return fnv1a64_bytes(out.data(), out.size() * sizeof(T));
            };
            break;
        case KernelId::OuterProductBatch: {
            h1 = req.size.h;
            // the outer-product kernel is benched on its own; mapping K into
            // feature space is preparation
            kp_prepared = apply_feature_map(k, fmap);
            run = [&] {
                const OuterBatch<T> out =
                    batched_outer_accumulate(kp_prepared, v, {0, req.size.n});
                return fnv1a64_bytes(out.data.data(), out.data.size() * sizeof(T));
            };
            break;
        }
        case KernelId::Mixed: {
            const PartitionConfig<T> cfg =
                PartitionConfig<T>::from_tau(req.size.h, req.tau, wcfg, fmap, req.causal);
            h0 = cfg.sparse_heads;
            h1 = cfg.linear_heads;
            run = [&, cfg] {
                const Tensor4<T> out = mixed_attention_forward(q, k, v, cfg);
                return fnv1a64_bytes(out.data(), out.size() * sizeof(T));
            };
            break;
        }
    }

    report.h0 = h0;
    report.h1 = h1;
    report.flops = kernel_flops(req.kernel, req.size, req.mode, h0, h1,
                                req.feature_map == FeatureMapKind::PositiveOrf
                                    ? request_feature_dim(req)
                                    : req.size.e);

    using clock = std::chrono::steady_clock;

    // warm-up, discarded from the samples
    auto t0 = clock::now();
    report.checksum = run();
    report.warmup_seconds = std::chrono::duration<double>(clock::now() - t0).count();

    report.seconds.reserve(req.repeats);
    for (std::size_t r = 0; r < req.repeats; ++r) {
        t0 = clock::now();
        const std::uint64_t sum = run();
        report.seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        if (verify_mode() && sum != report.checksum) {
            throw VerifyError(std::string(kernel_name(req.kernel)) +
                              " produced differing checksums across repeats");
        }
    }
    return report;
}

} // namespace

BenchReport measure_kernel(const BenchRequest& req) {
    if (req.precision == Precision::F32) return measure_impl<float>(req);
    return measure_impl<double>(req);
}

const char* kCsvHeader =
    "schema,kernel,mode,B,H,N,E,W,h0,h1,repeat,seconds,flops,flops_per_sec,threads,seed,"
    "precision";

void write_csv_row(std::ostream& os, const BenchReport& report, std::size_t repeat_index) {
    const double secs = report.seconds.at(repeat_index);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9e", secs);
    std::string secs_str(buf);
    std::snprintf(buf, sizeof(buf), "%.6e",
                  secs > 0.0 ? static_cast<double>(report.flops) / secs : 0.0);
    std::string rate_str(buf);

    os << 1 << ',' << kernel_name(report.kernel) << ',' << flops_mode_name(report.mode) << ','
       << report.size.b << ',' << report.size.h << ',' << report.size.n << ',' << report.size.e
       << ',' << report.size.w << ',' << report.h0 << ',' << report.h1 << ',' << repeat_index
       << ',' << secs_str << ',' << report.flops << ',' << rate_str << ',' << report.threads
       << ',' << report.seed << ',' << precision_name(report.precision) << '\n';
}

void write_csv(std::ostream& os, const BenchReport& report) {
    for (std::size_t r = 0; r < report.seconds.size(); ++r) write_csv_row(os, report, r);
}

std::vector<PathMeasurement> to_path_measurements(std::span<const BenchReport> reports) {
    std::vector<PathMeasurement> out;
    for (const BenchReport& r : reports) {
        const int path = kernel_path(r.kernel);
        if (path < 0) continue;
        out.push_back({path, static_cast<double>(r.flops), r.min_seconds()});
    }
    return out;
}

} // namespace mae
