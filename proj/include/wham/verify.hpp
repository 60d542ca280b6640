#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "baselines.hpp"
#include "bucket_enum.hpp"
#include "code.hpp"
#include "dataset_io.hpp"
#include "multi_index.hpp"

namespace wham {

struct VerifyConfig {
    std::size_t bits = 12;
    std::size_t n = 2000;
    std::size_t trials = 50;
    std::uint64_t seed = 1;
    bool inject_fault = false;  // corrupt the bit ranking of every context
};

struct VerifyReport {
    std::size_t trials = 0;
    std::size_t enumerator_checks = 0;
    std::size_t query_checks = 0;
    std::vector<std::string> failures;

    bool passed() const noexcept { return failures.empty(); }
};

/// Exhausts an enumerator (or its first `cap` buckets) and checks uniqueness,
/// non-decreasing weights and, when exhaustive, agreement with a brute-force sort.
/// Returns an empty string on success.
inline std::string check_enumerator(const QueryContext& ctx, std::uint64_t cap = 1u << 16) {
    const std::size_t b = ctx.size();
    const std::uint64_t total = b >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << b);
    const bool exhaustive = total <= cap;
    BucketEnumerator e(ctx);
    std::unordered_set<std::uint64_t> seen;
    std::vector<double> weights;
    double last = -1.0;
    while (weights.size() < std::min(total, cap)) {
        const auto bucket = e.next();
        if (!bucket) return "enumerator ran dry after " + std::to_string(weights.size()) + " buckets";
        if (!seen.insert(bucket->key).second) {
            return "bucket " + std::to_string(bucket->key) + " emitted twice";
        }
        if (bucket->weight < last) {
            return "weight decreased at emission " + std::to_string(weights.size());
        }
        if (bucket->weight != ctx.distance(bucket->key)) {
            return "emitted weight differs from the bucket's distance";
        }
        last = bucket->weight;
        weights.push_back(bucket->weight);
    }
    if (exhaustive) {
        if (e.next()) return "enumerator emitted more than 2^b buckets";
        std::vector<double> brute(total);
        for (std::uint64_t key = 0; key < total; ++key) brute[key] = ctx.distance(key);
        std::sort(brute.begin(), brute.end());
        if (brute != weights) return "emitted weights differ from the brute-force sorted distances";
    }
    return {};
}

/// Seeded property checks: enumerator completeness and monotonicity, and
/// multi-index results against a linear scan.
inline VerifyReport run_verification(const VerifyConfig& cfg) {
    detail::check_bits(cfg.bits);
    VerifyReport rep;
    std::mt19937_64 rng(cfg.seed);
    const std::size_t b = cfg.bits;
    const std::size_t cap = b <= 16 ? (std::size_t{1} << b) : (std::size_t{1} << 16);
    static constexpr std::size_t kChoices[] = {1, 10, 100};

    for (std::size_t t = 0; t < cfg.trials; ++t) {
        ++rep.trials;
        const std::uint64_t s = rng();
        const WeightTable w = synth_weights(b, s, WeightScheme::uniform_asym);
        const BinaryCode q = random_codes(1, b, s + 1).code(0);

        QueryContext ctx(q, w);
        if (cfg.inject_fault) ctx = inject_order_fault(std::move(ctx));
        ++rep.enumerator_checks;
        if (auto err = check_enumerator(ctx, cap); !err.empty()) {
            rep.failures.push_back("trial " + std::to_string(t) + ": " + err);
            continue;
        }

        if (cfg.n == 0) continue;
        const CodeSet codes = random_codes(cfg.n, b, s + 2);
        // Substrings of at most 16 bits keep uniform random data cheap to search.
        const std::size_t m_options[] = {1, std::min<std::size_t>(2, b), resolve_m(b, cfg.n)};
        const std::size_t m = std::max(m_options[t % 3], (b + 15) / 16);
        const MultiIndex ix(codes, m);
        const std::size_t K = kChoices[t % 3];
        QueryStats st;
        const auto got = query_multi(ix, q, w, K, &st);
        const auto want = linear_scan_topk(codes, q, w, K);
        ++rep.query_checks;
        if (got != want) {
            rep.failures.push_back("trial " + std::to_string(t) + ": multi-index result differs from "
                                   "linear scan (m=" + std::to_string(m) + ", K=" + std::to_string(K) + ")");
            continue;
        }
        for (const auto& nb : got) {
            if (nb.distance > st.final_bound) {
                rep.failures.push_back("trial " + std::to_string(t) + ": returned distance above the final bound");
                break;
            }
        }
    }
    return rep;
}

}  // namespace wham
