// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion 4   run one (repeatable)

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <wham/wham.hpp>

using namespace wham;

namespace {

// Pinned thresholds.
constexpr std::size_t kExactInstances = 100;
constexpr std::size_t kExactN = 100000;
constexpr std::size_t kExactQueriesPerInstance = 10;
constexpr std::size_t kExactClusters = 100;
constexpr std::size_t kMaxMismatches = 0;
constexpr std::size_t kMaxBoundViolations = 0;

constexpr std::size_t kEnumContexts = 100;
constexpr std::size_t kMaxEnumViolations = 0;

constexpr std::size_t kSpeedN = 1000000;
constexpr std::size_t kSpeedQueries = 1000;
constexpr std::size_t kSpeedBits = 32;
constexpr std::size_t kSpeedK = 100;
constexpr std::size_t kSpeedWarmup = 10;
constexpr double kMinSpeedup = 5.0;

constexpr std::size_t kLutTriples = 10000;
constexpr std::size_t kMaxLutMismatches = 0;

constexpr std::size_t kUnitInstances = 50;
constexpr std::size_t kUnitBits = 32;
constexpr std::size_t kUnitN = 10000;
constexpr std::size_t kUnitK = 10;

constexpr std::size_t kRoundTripTrials = 30;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Criteria 1 and 3 share one sweep.

struct ExactSweep {
    std::size_t queries = 0;
    std::size_t mismatches = 0;
    std::size_t bound_violations = 0;
    std::size_t clustered_instances = 0;
    std::string first_mismatch;
};

const ExactSweep& exact_sweep() {
    static const ExactSweep sweep = [] {
        ExactSweep s;
        constexpr std::size_t kBits[] = {16, 32, 64};
        constexpr std::size_t kMs[] = {0, 1, 2, 4};  // 0 = auto
        constexpr std::size_t kKs[] = {1, 10, 100};
        for (std::size_t i = 0; i < kExactInstances; ++i) {
            const std::size_t b = kBits[i % 3];
            const std::size_t m = kMs[(i / 3) % 4] ? kMs[(i / 3) % 4] : resolve_m(b, kExactN);
            const std::size_t K = kKs[(i / 12) % 3];
            const std::uint64_t seed = 1000 + i;

            // Uniform codes while every substring is at most 16 bits; beyond that
            // a uniform table is almost all empty buckets, so codes are clustered.
            CodeSet base, queries;
            if ((b + m - 1) / m <= 16) {
                base = random_codes(kExactN, b, seed);
                queries = random_codes(kExactQueriesPerInstance, b, seed + 1);
            } else {
                const double flip = b == 32 ? 0.06 : 0.015;
                auto cc = clustered_codes(kExactN, kExactQueriesPerInstance, b, kExactClusters, flip, seed);
                base = std::move(cc.base);
                queries = std::move(cc.queries);
                ++s.clustered_instances;
            }
            const WeightTable w = synth_weights(b, seed + 2, WeightScheme::uniform_asym);
            const MultiIndex ix(base, m);
            MultiIndexSearcher searcher(ix);
            const auto t_inst = std::chrono::steady_clock::now();

            for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                const BinaryCode q = queries.code(qi);
                QueryStats st;
                const NeighborList got = qi % 2 ? searcher.search(q, w, K, &st) : query_multi(ix, q, w, K, &st);
                const NeighborList want = linear_scan_topk(base, q, w, K);
                ++s.queries;
                if (got != want) {
                    ++s.mismatches;
                    if (s.first_mismatch.empty()) {
                        s.first_mismatch = "instance " + std::to_string(i) + " b=" + std::to_string(b) +
                                           " m=" + std::to_string(m) + " K=" + std::to_string(K);
                    }
                }
                for (const auto& nb : got) {
                    if (nb.distance > st.final_bound) {
                        ++s.bound_violations;
                        break;
                    }
                }
            }
            if (std::getenv("WHAM_ACCEPT_TRACE")) {
                std::fprintf(stderr, "  instance %zu b=%zu m=%zu K=%zu %.2fs\n", i, b, m, K, seconds_since(t_inst));
            }
        }
        return s;
    }();
    return sweep;
}

Outcome exactness() {
    const auto& s = exact_sweep();
    std::ostringstream d;
    d << kExactInstances << " instances, " << s.queries << " queries (n=" << kExactN
      << ", b in {16,32,64}, m in {auto,1,2,4}, K in {1,10,100}, " << s.clustered_instances
      << " clustered), mismatches=" << s.mismatches << " (max " << kMaxMismatches << ")";
    if (!s.first_mismatch.empty()) d << ", first at " << s.first_mismatch;
    return {s.mismatches <= kMaxMismatches, d.str()};
}

Outcome bound_safety() {
    const auto& s = exact_sweep();
    std::ostringstream d;
    d << s.queries << " queries, results above the final bound=" << s.bound_violations << " (max "
      << kMaxBoundViolations << ")";
    return {s.bound_violations <= kMaxBoundViolations, d.str()};
}

// ---------------------------------------------------------------------------

Outcome enumeration() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::size_t violations = 0, contexts = 0;
    std::string first;
    for (std::size_t b : {8u, 12u, 16u}) {
        for (std::size_t c = 0; c < kEnumContexts; ++c) {
            BinaryCode q(b);
            for (std::size_t i = 0; i < b; ++i) q.set(i, rng() & 1u);
            std::vector<WeightTable::Entry> e(b);
            // Every fourth context uses small integer weights so equal weights are common.
            for (auto& x : e) {
                x = c % 4 == 3 ? WeightTable::Entry{double(rng() % 3), double(rng() % 3)}
                               : WeightTable::Entry{u(rng), u(rng)};
            }
            const WeightTable w(std::move(e));
            const QueryContext ctx(q, w);
            ++contexts;

            // Oracle: distance from the query to every possible code.
            const std::uint64_t total = std::uint64_t{1} << b;
            std::vector<double> brute(total);
            for (std::uint64_t key = 0; key < total; ++key) {
                brute[key] = weighted_distance(q, BinaryCode::from_word(key, b), w);
            }
            std::vector<char> hit(total, 0);
            std::vector<double> emitted;
            std::string problem;
            BucketEnumerator en(ctx);
            while (auto bucket = en.next()) {
                if (hit[bucket->key]) problem = "bucket emitted twice";
                hit[bucket->key] = 1;
                if (bucket->weight != brute[bucket->key]) problem = "weight differs from distance";
                if (!emitted.empty() && bucket->weight < emitted.back()) problem = "weight decreased";
                emitted.push_back(bucket->weight);
                if (!problem.empty()) break;
            }
            if (problem.empty() && emitted.size() != total) problem = "not every bucket emitted";
            std::sort(brute.begin(), brute.end());
            if (problem.empty() && emitted != brute) problem = "sequence differs from sorted distances";
            if (!problem.empty()) {
                ++violations;
                if (first.empty()) first = "b=" + std::to_string(b) + " context " + std::to_string(c) + ": " + problem;
            }
        }
    }
    std::ostringstream d;
    d << contexts << " contexts exhausted (b in {8,12,16}), violations=" << violations << " (max "
      << kMaxEnumViolations << ")";
    if (!first.empty()) d << ", first: " << first;
    return {violations <= kMaxEnumViolations, d.str()};
}

// ---------------------------------------------------------------------------

Outcome speedup() {
    const CodeSet base = random_codes(kSpeedN, kSpeedBits, 41);
    const CodeSet queries = random_codes(kSpeedQueries, kSpeedBits, 42);
    const WeightTable w = synth_weights(kSpeedBits, 43, WeightScheme::uniform_asym);
    const MultiIndex ix(base, resolve_m(kSpeedBits, kSpeedN));
    MultiIndexSearcher searcher(ix);

    std::vector<BinaryCode> qs;
    for (std::size_t i = 0; i < queries.size(); ++i) qs.push_back(queries.code(i));
    std::vector<NeighborList> lin(qs.size()), miwq(qs.size());

    auto mean_ms = [&](auto&& run) {
        for (std::size_t i = 0; i < kSpeedWarmup; ++i) run(i % qs.size());
        double total = 0.0;
        for (std::size_t i = 0; i < qs.size(); ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            run(i);
            total += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
        return total / static_cast<double>(qs.size());
    };
    const double linear_ms = mean_ms([&](std::size_t i) { lin[i] = linear_scan_topk(base, qs[i], w, kSpeedK); });
    const double miwq_ms = mean_ms([&](std::size_t i) { miwq[i] = searcher.search(qs[i], w, kSpeedK); });
    const std::size_t differ = static_cast<std::size_t>(
        std::count_if(qs.begin(), qs.end(), [&, i = std::size_t{0}](const BinaryCode&) mutable {
            const bool d = lin[i] != miwq[i];
            ++i;
            return d;
        }));
    const double factor = speedup_factor(linear_ms, miwq_ms);

    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "n=%zu b=%zu m=%zu K=%zu, %zu queries: linear %.3f ms, MIWQ %.3f ms, speed-up %.2fx "
                  "(min %.1fx), differing results=%zu",
                  kSpeedN, kSpeedBits, ix.m(), kSpeedK, kSpeedQueries, linear_ms, miwq_ms, factor, kMinSpeedup,
                  differ);
    return {factor >= kMinSpeedup && differ == 0, buf};
}

// ---------------------------------------------------------------------------

Outcome mih_gap() {
    // Query 0. Bits 0-2 cost 0.01 to flip, the rest 1.0. Thirteen fillers sit at
    // Hamming radius 1 on the expensive bits; the target flips the three cheap bits.
    constexpr std::size_t b = 16;
    std::vector<WeightTable::Entry> e(b, {0.0, 1.0});
    for (std::size_t i = 0; i < 3; ++i) e[i] = {0.0, 0.01};
    const WeightTable w(std::move(e));
    CodeSet codes(b);
    for (std::size_t i = 3; i < b; ++i) {
        BinaryCode c(b);
        c.set(i, true);
        codes.push_back(c);
    }
    const Id target = codes.size();
    codes.push_back(BinaryCode::from_string("1110000000000000"));
    const MultiIndex ix(codes, 2);
    const BinaryCode q(b);

    MihStats ms;
    const auto mih = mih_weighted_topk(ix, q, w, 1, &ms);
    const auto exact = query_multi(ix, q, w, 1);
    const auto truth = linear_scan_topk(codes, q, w, 1);
    const bool pass = truth.at(0).id == target && exact == truth && mih.at(0).id != target;

    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "true 1-NN id %llu at %.2f; MIWQ returned id %llu at %.2f; MIH (radius %d) returned id %llu at %.2f",
                  static_cast<unsigned long long>(truth.at(0).id), truth.at(0).distance,
                  static_cast<unsigned long long>(exact.at(0).id), exact.at(0).distance, ms.radius,
                  static_cast<unsigned long long>(mih.at(0).id), mih.at(0).distance);
    return {pass, buf};
}

// ---------------------------------------------------------------------------

Outcome lut_equivalence() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::size_t mismatches = 0;
    for (std::size_t t = 0; t < kLutTriples; ++t) {
        const std::size_t b = 1 + rng() % kMaxBits;
        BinaryCode q(b), g(b);
        std::vector<WeightTable::Entry> e(b);
        for (std::size_t i = 0; i < b; ++i) {
            q.set(i, rng() & 1u);
            g.set(i, rng() & 1u);
            e[i] = {u(rng), u(rng)};
        }
        const QueryContext ctx(q, WeightTable(std::move(e)));
        if (ChunkLUT(ctx).distance(g.bytes()) != context_distance(ctx, g)) ++mismatches;
    }
    std::ostringstream d;
    d << kLutTriples << " random (q, w, g) triples, b in [1,256], bit-exact mismatches=" << mismatches << " (max "
      << kMaxLutMismatches << ")";
    return {mismatches <= kMaxLutMismatches, d.str()};
}

// ---------------------------------------------------------------------------

Outcome unit_reduction() {
    std::size_t failures = 0;
    for (std::size_t i = 0; i < kUnitInstances; ++i) {
        const CodeSet base = random_codes(kUnitN, kUnitBits, 7000 + i);
        const BinaryCode q = random_codes(1, kUnitBits, 8000 + i).code(0);
        const MultiIndex ix(base, resolve_m(kUnitBits, kUnitN));
        const auto got = query_multi(ix, q, WeightTable::unit(kUnitBits), kUnitK);

        // Oracle: popcount over the packed bytes, then the K smallest.
        std::vector<double> h(base.size());
        for (std::size_t j = 0; j < base.size(); ++j) {
            int c = 0;
            const auto row = base[j];
            for (std::size_t k = 0; k < row.size(); ++k) c += std::popcount(static_cast<unsigned>(row[k] ^ q.bytes()[k]));
            h[j] = c;
        }
        std::sort(h.begin(), h.end());
        h.resize(kUnitK);
        std::vector<double> d;
        for (const auto& nb : got) d.push_back(nb.distance);
        if (d != h) ++failures;
    }
    std::ostringstream d;
    d << kUnitInstances << " instances (b=" << kUnitBits << ", n=" << kUnitN << ", K=" << kUnitK
      << "), distance multisets differing from the Hamming oracle=" << failures << " (max 0)";
    return {failures == 0, d.str()};
}

// ---------------------------------------------------------------------------

template <class Write>
std::string bytes_of(Write&& write) {
    std::ostringstream out(std::ios::binary);
    write(out);
    return out.str();
}

Outcome round_trips() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::size_t failures = 0, odd_lengths = 0, checks = 0;
    const std::vector<std::size_t> fixed{7, 13, 1, 64, 100, 256};
    for (std::size_t t = 0; t < kRoundTripTrials; ++t) {
        const std::size_t b = t < fixed.size() ? fixed[t] : 1 + rng() % kMaxBits;
        if (b % 8 != 0) ++odd_lengths;
        const CodeSet codes = random_codes(rng() % 3000, b, rng());
        std::vector<WeightTable::Entry> e(b);
        for (auto& x : e) x = {u(rng), u(rng)};
        const WeightTable w(std::move(e));
        const std::size_t lo_m = (b + kMaxEnumBits - 1) / kMaxEnumBits;
        const std::size_t m = lo_m + rng() % (std::min<std::size_t>(b, 8) - lo_m + 1);
        const MultiIndex ix(codes, m);

        const std::string c1 = bytes_of([&](std::ostream& o) { write_codes(o, codes); });
        const std::string w1 = bytes_of([&](std::ostream& o) { write_weights(o, w); });
        const std::string i1 = bytes_of([&](std::ostream& o) { write_index(o, ix); });
        std::istringstream ci(c1), wi(w1), ii(i1);
        const CodeSet codes2 = read_codes(ci);
        const WeightTable w2 = read_weights(wi);
        const MultiIndex ix2 = read_index(ii);
        checks += 3;
        if (!(codes2 == codes) || bytes_of([&](std::ostream& o) { write_codes(o, codes2); }) != c1) ++failures;
        if (!(w2 == w) || bytes_of([&](std::ostream& o) { write_weights(o, w2); }) != w1) ++failures;
        if (!(ix2.codes() == codes) || bytes_of([&](std::ostream& o) { write_index(o, ix2); }) != i1) ++failures;
    }
    std::ostringstream d;
    d << checks << " WHC1/WHW1/WHI1 save-load-save checks (" << odd_lengths
      << " with b not a multiple of 8), not byte-identical=" << failures << " (max 0)";
    return {failures == 0 && odd_lengths > 0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> selected;
    app.add_option("--criterion,-c", selected, "criterion number(s) to run (default: all)")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
        {1, {"exactness against linear scan", exactness}},
        {2, {"bucket enumeration order", enumeration}},
        {3, {"stopping bound safety", bound_safety}},
        {4, {"speed-up over linear scan", speedup}},
        {5, {"MIH misses the weighted nearest code", mih_gap}},
        {6, {"LUT distance equivalence", lut_equivalence}},
        {7, {"unit weights reduce to Hamming", unit_reduction}},
        {8, {"file format round-trips", round_trips}},
    };
    if (selected.empty()) {
        for (const auto& [k, v] : criteria) selected.push_back(k);
    }

    bool all = true;
    for (int c : selected) {
        const auto& [name, fn] = criteria.at(c);
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d %s: %s - %s [%.1fs]\n", c, name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
