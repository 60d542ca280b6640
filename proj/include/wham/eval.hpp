#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "code.hpp"
#include "dataset_io.hpp"
#include "multi_index.hpp"

namespace wham {

/// Per query, the ids that count as true neighbors (rank order where it exists).
struct GroundTruth {
    std::vector<std::vector<Id>> lists;
};

/// |retrieved[0..K) ∩ truth| / K.
inline double precision_at_k(std::span<const Id> retrieved, std::span<const Id> truth,
                             std::size_t K) {
    if (K < 1) throw ArgumentError("K must be at least 1");
    std::vector<Id> sorted(truth.begin(), truth.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t top = std::min(K, retrieved.size());
    std::set<Id> counted;
    for (std::size_t i = 0; i < top; ++i) {
        if (std::binary_search(sorted.begin(), sorted.end(), retrieved[i])) counted.insert(retrieved[i]);
    }
    return static_cast<double>(counted.size()) / static_cast<double>(K);
}

inline double speedup_factor(double t_linear_ms, double t_method_ms) {
    if (!(t_method_ms > 0.0) || !(t_linear_ms > 0.0)) {
        throw ArgumentError("speed-up needs positive run times");
    }
    return t_linear_ms / t_method_ms;
}

/// Top-T base ids per query by squared Euclidean distance, ties by id.
inline GroundTruth euclidean_groundtruth(const VectorSet& base, const VectorSet& queries,
                                         std::size_t T, unsigned threads = 0) {
    if (base.n > 0 && queries.n > 0 && base.d != queries.d) {
        throw DimensionError("base vectors have d=" + std::to_string(base.d) + ", queries d=" +
                             std::to_string(queries.d));
    }
    GroundTruth gt;
    gt.lists.resize(queries.n);
    const std::size_t keep = std::min(T, base.n);
    auto work = [&](std::size_t first, std::size_t step) {
        std::vector<std::pair<double, Id>> scored(base.n);
        for (std::size_t qi = first; qi < queries.n; qi += step) {
            const auto q = queries.row(qi);
            for (std::size_t i = 0; i < base.n; ++i) {
                const auto x = base.row(i);
                double s = 0.0;
                for (std::size_t k = 0; k < base.d; ++k) {
                    const double diff = static_cast<double>(x[k]) - static_cast<double>(q[k]);
                    s += diff * diff;
                }
                scored[i] = {s, i};
            }
            std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                              scored.end());
            auto& list = gt.lists[qi];
            list.resize(keep);
            for (std::size_t r = 0; r < keep; ++r) list[r] = scored[r].second;
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    if (threads == 1 || queries.n < 2) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    return gt;
}

/// Truth by label match: every base id sharing the query's label.
inline GroundTruth label_groundtruth(std::span<const std::int64_t> base_labels,
                                     std::span<const std::int64_t> query_labels) {
    std::map<std::int64_t, std::vector<Id>> by_label;
    for (std::size_t i = 0; i < base_labels.size(); ++i) by_label[base_labels[i]].push_back(i);
    GroundTruth gt;
    gt.lists.reserve(query_labels.size());
    for (auto l : query_labels) {
        auto it = by_label.find(l);
        gt.lists.push_back(it == by_label.end() ? std::vector<Id>{} : it->second);
    }
    return gt;
}

/// One integer label per line.
inline std::vector<std::int64_t> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " for reading");
    std::vector<std::int64_t> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            std::size_t used = 0;
            labels.push_back(std::stoll(line, &used));
        } catch (const std::exception&) {
            throw ArgumentError(path + ":" + std::to_string(lineno) + ": not an integer label");
        }
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Benchmark harness.

struct BenchRecord {
    std::string method;
    std::size_t b = 0;
    std::size_t m = 0;
    std::size_t K = 0;
    double mean_ms = 0.0;
    double speedup = 0.0;
    double precision = 0.0;
    double mean_candidates = 0.0;
    double mean_buckets = 0.0;
};

struct BenchConfig {
    std::uint64_t seed = 1;
    std::string data = "random";  // random | clustered | gaussian | files
    std::size_t n = 100000;
    std::size_t queries = 100;
    std::size_t clusters = 100;
    double flip = 0.05;
    std::size_t dim = 32;
    double spread = 0.3;
    std::string base_path;
    std::string query_path;
    std::uint64_t limit = io::kNoLimit;
    std::vector<std::size_t> bits{32};
    std::vector<std::size_t> ks{1, 10, 100};
    std::vector<std::string> methods{"linear", "mih", "miwq"};
    std::optional<std::size_t> m;  // empty = auto
    std::string weights = "uniform-asym";  // scheme name or WHW1 path
    std::string truth = "linear";          // linear | euclidean | labels
    std::size_t truth_t = 1000;
    std::string base_labels;
    std::string query_labels;
    std::size_t warmup = 10;
    std::size_t repetitions = 1;
};

struct BenchReport {
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::vector<BenchRecord> records;
};

struct ConfigError : ArgumentError {
    using ArgumentError::ArgumentError;
};

namespace detail {

inline std::size_t line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace detail

/// JSON bench configuration; unknown keys and bad values are rejected.
inline BenchConfig parse_bench_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config line " + std::to_string(detail::line_of(text, e.byte)) + ": " +
                          e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    BenchConfig c;
    auto fail = [](const std::string& key, const std::string& why) -> ConfigError {
        return ConfigError("config key '" + key + "': " + why);
    };
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "data") c.data = v.get<std::string>();
            else if (key == "n") c.n = v.get<std::size_t>();
            else if (key == "queries") c.queries = v.get<std::size_t>();
            else if (key == "clusters") c.clusters = v.get<std::size_t>();
            else if (key == "flip") c.flip = v.get<double>();
            else if (key == "dim") c.dim = v.get<std::size_t>();
            else if (key == "spread") c.spread = v.get<double>();
            else if (key == "base") c.base_path = v.get<std::string>();
            else if (key == "query") c.query_path = v.get<std::string>();
            else if (key == "limit") c.limit = v.get<std::uint64_t>();
            else if (key == "bits") c.bits = v.get<std::vector<std::size_t>>();
            else if (key == "K") c.ks = v.get<std::vector<std::size_t>>();
            else if (key == "methods") c.methods = v.get<std::vector<std::string>>();
            else if (key == "m") {
                if (v.is_string() && v.get<std::string>() == "auto") c.m.reset();
                else c.m = v.get<std::size_t>();
            }
            else if (key == "weights") c.weights = v.get<std::string>();
            else if (key == "truth") c.truth = v.get<std::string>();
            else if (key == "truth_T") c.truth_t = v.get<std::size_t>();
            else if (key == "base_labels") c.base_labels = v.get<std::string>();
            else if (key == "query_labels") c.query_labels = v.get<std::string>();
            else if (key == "warmup") c.warmup = v.get<std::size_t>();
            else if (key == "repetitions") c.repetitions = v.get<std::size_t>();
            else throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config value has the wrong type: ") + e.what());
    }

    static const std::set<std::string> datas{"random", "clustered", "gaussian", "files"};
    static const std::set<std::string> methods{"linear", "mih", "miwq"};
    static const std::set<std::string> truths{"linear", "euclidean", "labels"};
    if (!datas.contains(c.data)) throw fail("data", "expected random, clustered, gaussian or files");
    for (const auto& mth : c.methods) {
        if (!methods.contains(mth)) throw fail("methods", "unknown method '" + mth + "'");
    }
    if (c.methods.empty()) throw fail("methods", "must not be empty");
    if (!truths.contains(c.truth)) throw fail("truth", "expected linear, euclidean or labels");
    if (c.truth == "euclidean" && (c.data == "random" || c.data == "clustered")) {
        throw fail("truth", "euclidean truth needs vector data (gaussian or files)");
    }
    if (c.truth == "labels" && (c.base_labels.empty() || c.query_labels.empty())) {
        throw fail("truth", "labels truth needs base_labels and query_labels");
    }
    if (c.data == "files" && (c.base_path.empty() || c.query_path.empty())) {
        throw fail("data", "files data needs base and query paths");
    }
    if (c.bits.empty()) throw fail("bits", "must not be empty");
    for (auto b : c.bits) {
        if (b < 1 || b > kMaxBits) throw fail("bits", "each entry must be in [1, 256]");
    }
    if (c.ks.empty()) throw fail("K", "must not be empty");
    for (auto k : c.ks) {
        if (k < 1) throw fail("K", "entries must be at least 1");
    }
    if (c.queries < 1 && c.data != "files") throw fail("queries", "must be at least 1");
    if (c.warmup < 10) throw fail("warmup", "at least 10 warm-up queries are required");
    if (c.repetitions < 1) throw fail("repetitions", "must be at least 1");
    if (c.flip < 0.0 || c.flip > 1.0) throw fail("flip", "must be in [0, 1]");
    if (c.weights != "unit" && c.weights != "uniform-asym" && c.bits.size() != 1) {
        throw fail("weights", "a weights file fixes b, so bits must list a single value");
    }
    return c;
}

inline nlohmann::json to_json(const BenchConfig& c) {
    nlohmann::json j{{"seed", c.seed},         {"data", c.data},       {"n", c.n},
                     {"queries", c.queries},   {"bits", c.bits},       {"K", c.ks},
                     {"methods", c.methods},   {"weights", c.weights}, {"truth", c.truth},
                     {"warmup", c.warmup},     {"repetitions", c.repetitions}};
    j["m"] = c.m ? nlohmann::json(*c.m) : nlohmann::json("auto");
    if (c.data == "clustered") {
        j["clusters"] = c.clusters;
        j["flip"] = c.flip;
    }
    if (c.data == "gaussian") {
        j["clusters"] = c.clusters;
        j["dim"] = c.dim;
        j["spread"] = c.spread;
    }
    if (c.data == "files") {
        j["base"] = c.base_path;
        j["query"] = c.query_path;
        if (c.limit != io::kNoLimit) j["limit"] = c.limit;
    }
    if (c.truth == "euclidean") j["truth_T"] = c.truth_t;
    if (c.truth == "labels") {
        j["base_labels"] = c.base_labels;
        j["query_labels"] = c.query_labels;
    }
    return j;
}

namespace detail {

struct BenchData {
    std::optional<VectorSplit> vectors;
    std::function<std::pair<CodeSet, CodeSet>(std::size_t)> codes_for_bits;
};

inline BenchData load_bench_data(const BenchConfig& c) {
    BenchData data;
    if (c.data == "random") {
        data.codes_for_bits = [c](std::size_t b) {
            return std::pair{random_codes(c.n, b, c.seed), random_codes(c.queries, b, c.seed + 1)};
        };
        return data;
    }
    if (c.data == "clustered") {
        data.codes_for_bits = [c](std::size_t b) {
            auto cc = clustered_codes(c.n, c.queries, b, c.clusters, c.flip, c.seed);
            return std::pair{std::move(cc.base), std::move(cc.queries)};
        };
        return data;
    }
    if (c.data == "gaussian") {
        data.vectors = gaussian_mixture(c.n, c.queries, c.dim, c.clusters, c.spread, c.seed);
    } else {
        data.vectors = VectorSplit{read_vectors(c.base_path, c.limit), read_vectors(c.query_path, c.limit)};
        if (data.vectors->base.n > 0 && data.vectors->queries.n > 0 &&
            data.vectors->base.d != data.vectors->queries.d) {
            throw DimensionError("base and query vectors differ in dimension");
        }
    }
    const VectorSplit* vs = &*data.vectors;
    const std::uint64_t seed = c.seed;
    data.codes_for_bits = [vs, seed](std::size_t b) {
        return std::pair{binarize_lsh(vs->base, b, seed), binarize_lsh(vs->queries, b, seed)};
    };
    return data;
}

template <class Fn>
double mean_query_ms(std::size_t nq, std::size_t warmup, std::size_t reps, Fn&& run) {
    for (std::size_t i = 0; i < warmup; ++i) run(i % nq);
    double total = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < nq; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            run(i);
            const auto t1 = std::chrono::steady_clock::now();
            total += std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
    }
    return total / static_cast<double>(nq * reps);
}

inline std::vector<Id> ids_of(const NeighborList& l) {
    std::vector<Id> ids(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) ids[i] = l[i].id;
    return ids;
}

}  // namespace detail

/// Runs every (b, K, method) cell of the grid. Index build and ground truth are
/// outside the timed region; each method gets `warmup` untimed queries first.
inline BenchReport run_benchmark(const BenchConfig& c) {
    BenchReport report;
    report.config = to_json(c);
    report.seed = c.seed;
    auto data = detail::load_bench_data(c);

    std::optional<GroundTruth> fixed_truth;
    if (c.truth == "euclidean") {
        fixed_truth = euclidean_groundtruth(data.vectors->base, data.vectors->queries, c.truth_t);
    } else if (c.truth == "labels") {
        const auto bl = read_labels(c.base_labels);
        const auto ql = read_labels(c.query_labels);
        fixed_truth = label_groundtruth(bl, ql);
    }

    for (std::size_t b : c.bits) {
        auto [base, queries] = data.codes_for_bits(b);
        const std::size_t nq = queries.size();
        if (nq == 0) throw ArgumentError("benchmark has no queries");
        if (fixed_truth && fixed_truth->lists.size() < nq) {
            throw DimensionError("ground truth covers fewer queries than the query set");
        }
        const WeightTable w = (c.weights == "unit" || c.weights == "uniform-asym")
                                  ? synth_weights(b, c.seed, c.weights)
                                  : load_weights(c.weights);
        detail::check_same_length(w.size(), b, "benchmark weights");
        const std::size_t m = c.m ? *c.m : resolve_m(b, base.size());
        const MultiIndex ix(base, m);
        MultiIndexSearcher searcher(ix);

        for (std::size_t K : c.ks) {
            std::vector<NeighborList> truth_lists;
            if (!fixed_truth) {
                truth_lists.reserve(nq);
                for (std::size_t i = 0; i < nq; ++i) {
                    truth_lists.push_back(linear_scan_topk(base, queries.code(i), w, K));
                }
            }
            auto precision_of = [&](const std::vector<NeighborList>& results) {
                double sum = 0.0;
                for (std::size_t i = 0; i < nq; ++i) {
                    const auto got = detail::ids_of(results[i]);
                    const auto truth = fixed_truth ? fixed_truth->lists[i] : detail::ids_of(truth_lists[i]);
                    sum += precision_at_k(got, truth, K);
                }
                return sum / static_cast<double>(nq);
            };

            std::vector<NeighborList> results(nq);
            std::vector<BinaryCode> qcodes;
            qcodes.reserve(nq);
            for (std::size_t i = 0; i < nq; ++i) qcodes.push_back(queries.code(i));

            const double linear_ms = detail::mean_query_ms(nq, c.warmup, c.repetitions, [&](std::size_t i) {
                results[i] = linear_scan_topk(base, qcodes[i], w, K);
            });
            const double linear_precision = precision_of(results);

            for (const auto& method : c.methods) {
                BenchRecord rec{method, b, m, K};
                if (method == "linear") {
                    rec.mean_ms = linear_ms;
                    rec.precision = linear_precision;
                    rec.mean_candidates = static_cast<double>(base.size());
                } else if (method == "miwq") {
                    std::vector<QueryStats> st(nq);
                    rec.mean_ms = detail::mean_query_ms(nq, c.warmup, c.repetitions, [&](std::size_t i) {
                        results[i] = searcher.search(qcodes[i], w, K, &st[i]);
                    });
                    rec.precision = precision_of(results);
                    for (const auto& s : st) {
                        rec.mean_candidates += static_cast<double>(s.candidates);
                        rec.mean_buckets += static_cast<double>(s.buckets_probed);
                    }
                } else {
                    std::vector<MihStats> st(nq);
                    rec.mean_ms = detail::mean_query_ms(nq, c.warmup, c.repetitions, [&](std::size_t i) {
                        results[i] = mih_weighted_topk(ix, qcodes[i], w, K, &st[i]);
                    });
                    rec.precision = precision_of(results);
                    for (const auto& s : st) {
                        rec.mean_candidates += static_cast<double>(s.candidates);
                        rec.mean_buckets += static_cast<double>(s.buckets_probed);
                    }
                }
                if (method != "linear") {
                    rec.mean_candidates /= static_cast<double>(nq);
                    rec.mean_buckets /= static_cast<double>(nq);
                }
                rec.speedup = method == "linear" ? 1.0 : speedup_factor(linear_ms, rec.mean_ms);
                report.records.push_back(rec);
            }
        }
    }
    return report;
}

inline void write_csv(std::ostream& out, std::span<const BenchRecord> records) {
    out << "method,b,m,K,mean_ms,speedup,precision,mean_candidates,mean_buckets\n";
    const auto flags = out.flags();
    for (const auto& r : records) {
        out << r.method << ',' << r.b << ',' << r.m << ',' << r.K << ',' << std::fixed
            << std::setprecision(6) << r.mean_ms << ',' << std::setprecision(3) << r.speedup << ','
            << std::setprecision(6) << r.precision << ',' << std::setprecision(1)
            << r.mean_candidates << ',' << r.mean_buckets << '\n';
        out.flags(flags);
    }
}

inline nlohmann::json to_json(const BenchReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.records) {
        rows.push_back({{"method", r.method},
                        {"b", r.b},
                        {"m", r.m},
                        {"K", r.K},
                        {"mean_ms", r.mean_ms},
                        {"speedup", r.speedup},
                        {"precision", r.precision},
                        {"mean_candidates", r.mean_candidates},
                        {"mean_buckets", r.mean_buckets}});
    }
    return {{"config", report.config}, {"seed", report.seed}, {"records", rows}};
}

}  // namespace wham
