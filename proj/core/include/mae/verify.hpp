#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mae {

struct CheckResult {
    std::string name;
    bool pass = false;
    double max_err = 0.0;
    double tolerance = 0.0;
    bool measured = false; // timing-dependent check; excluded from report files
};

struct VerifyOptions {
    std::uint64_t seed = 7;
    // Test fixture: mis-scales the dense oracle inside the windowed-oracle
    // check so the harness's failure path can be exercised end to end.
    bool inject_fault = false;
};

std::vector<CheckResult> verify_oracle_suite(const VerifyOptions& opts);
std::vector<CheckResult> verify_linear_suite(const VerifyOptions& opts);
std::vector<CheckResult> verify_partition_suite(const VerifyOptions& opts);

// suite is one of oracle | linear | partition | all.
std::vector<CheckResult> run_verify_suite(const std::string& suite, const VerifyOptions& opts);

bool all_passed(const std::vector<CheckResult>& results);

// Statistical fidelity of the PositiveOrf estimator: for `pairs` random
// (q,k) with post-scaling norms <= 2, the Monte-Carlo mean of phi(q).phi(k)
// over `seeds` feature draws must land within 3 standard errors of
// exp(q.k) for all but `allowed_failures` pairs.
CheckResult check_orf_kernel_estimator(std::uint64_t seed, std::size_t m, std::size_t e,
                                       std::size_t seeds, std::size_t pairs,
                                       std::size_t allowed_failures);

} // namespace mae
