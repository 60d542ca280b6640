#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include <wham/wham.hpp>

namespace wham::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kVerifyFailed = 3 };

inline std::string format_result(std::size_t ordinal, const NeighborList& result) {
    std::string line = std::to_string(ordinal);
    char buf[64];
    for (const auto& nb : result) {
        std::snprintf(buf, sizeof buf, " (%llu:%.6f)", static_cast<unsigned long long>(nb.id),
                      nb.distance);
        line += buf;
    }
    return line;
}

/// Runs queries [0, nq) on `threads` workers; fn(i) returns the output line for query i.
template <class Fn>
std::vector<std::string> run_queries(std::size_t nq, unsigned threads, Fn&& fn) {
    std::vector<std::string> lines(nq);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(nq, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < nq; ++i) lines[i] = fn(i, 0u);
        return lines;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < nq; i += threads) lines[i] = fn(i, t);
        });
    }
    for (auto& th : pool) th.join();
    return lines;
}

inline void check_output_path(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
        throw IoError("output directory " + parent.string() + " does not exist");
    }
}

inline void check_input_path(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw IoError("cannot open " + path + " for reading");
}

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact weighted Hamming K-NN search over binary codes", "wham"};
    app.require_subcommand(1);

    // binarize
    std::string vectors_path, codes_out;
    std::size_t bin_bits = 0;
    std::uint64_t bin_seed = 1, bin_limit = io::kNoLimit;
    auto* binarize = app.add_subcommand("binarize", "Random-hyperplane LSH codes from fvecs/bvecs");
    binarize->add_option("--vectors", vectors_path, "fvecs or bvecs input")->required();
    binarize->add_option("--bits,-b", bin_bits, "code length (1..256)")->required();
    binarize->add_option("--seed", bin_seed, "projection seed");
    binarize->add_option("--limit", bin_limit, "read at most this many vectors");
    binarize->add_option("--out,-o", codes_out, "output WHC1 file")->required();

    // weights
    std::string scheme = "uniform-asym", weights_out;
    std::size_t w_bits = 0;
    std::uint64_t w_seed = 1;
    auto* weights = app.add_subcommand("weights", "Write a synthetic WHW1 weight table");
    weights->add_option("--bits,-b", w_bits, "code length")->required();
    weights->add_option("--scheme", scheme, "unit or uniform-asym");
    weights->add_option("--seed", w_seed, "weight seed");
    weights->add_option("--out,-o", weights_out, "output WHW1 file")->required();

    // build
    std::string build_codes, build_m = "auto", index_out;
    auto* build = app.add_subcommand("build", "Build a multi-index from a WHC1 file");
    build->add_option("--codes", build_codes, "input WHC1 file")->required();
    build->add_option("--m", build_m, "substring count or 'auto'");
    build->add_option("--out,-o", index_out, "output WHI1 file")->required();

    // query
    std::string q_index, q_weights, q_queries, method = "miwq";
    std::size_t K = 10;
    unsigned threads = 1;
    auto* query = app.add_subcommand("query", "Run K-NN queries against an index");
    query->add_option("--index", q_index, "WHI1 index")->required();
    query->add_option("--weights", q_weights, "WHW1 weights")->required();
    query->add_option("--queries", q_queries, "WHC1 query codes")->required();
    query->add_option("--k,-k", K, "neighbors per query");
    query->add_option("--method", method, "miwq, linear, mih or single");
    query->add_option("--threads", threads, "worker threads (parallel over queries)");

    // verify
    VerifyConfig vcfg;
    auto* verify = app.add_subcommand("verify", "Seeded correctness checks of enumerator and index");
    verify->add_option("--bits,-b", vcfg.bits, "code length (<= 16 for exhaustive checks)");
    verify->add_option("--n", vcfg.n, "database size per trial");
    verify->add_option("--trials", vcfg.trials, "number of random trials");
    verify->add_option("--seed", vcfg.seed, "seed");
    verify->add_flag("--inject-fault", vcfg.inject_fault, "corrupt the bit ranking (negative control)");

    // bench
    std::string config_path, csv_out, json_out;
    auto* bench = app.add_subcommand("bench", "Benchmark methods over a JSON config");
    bench->add_option("--config", config_path, "JSON config file")->required();
    bench->add_option("--csv", csv_out, "CSV output path (default: stdout)");
    bench->add_option("--json", json_out, "JSON output path");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kUsage;
    }

    try {
        if (*binarize) {
            if (bin_bits < 1 || bin_bits > kMaxBits) {
                throw ArgumentError("--bits must be in [1, 256], got " + std::to_string(bin_bits));
            }
            check_input_path(vectors_path);
            check_output_path(codes_out);
            const VectorSet vs = read_vectors(vectors_path, bin_limit);
            const CodeSet codes = binarize_lsh(vs, bin_bits, bin_seed);
            save_codes(codes_out, codes);
            double lo = 1.0, hi = 0.0;
            for (std::size_t j = 0; j < bin_bits && codes.size() > 0; ++j) {
                std::size_t ones = 0;
                for (std::size_t i = 0; i < codes.size(); ++i) ones += codes.code(i).bit(j);
                const double f = static_cast<double>(ones) / static_cast<double>(codes.size());
                lo = std::min(lo, f);
                hi = std::max(hi, f);
            }
            out << "n=" << codes.size() << " b=" << bin_bits;
            if (codes.size() > 0) out << " bit-balance=[" << lo << ", " << hi << "]";
            out << "\n";
            return kOk;
        }
        if (*weights) {
            check_output_path(weights_out);
            save_weights(weights_out, synth_weights(w_bits, w_seed, scheme));
            out << "b=" << w_bits << " scheme=" << scheme << "\n";
            return kOk;
        }
        if (*build) {
            check_input_path(build_codes);
            check_output_path(index_out);
            CodeSet codes = load_codes(build_codes);
            std::size_t m = 0;
            if (build_m == "auto") {
                m = resolve_m(codes.bits(), codes.size());
            } else {
                try {
                    m = std::stoul(build_m);
                } catch (const std::exception&) {
                    throw ArgumentError("--m must be a positive integer or 'auto'");
                }
            }
            if (codes.size() == 0) err << "warning: no codes in " << build_codes << ", building an empty index\n";
            const MultiIndex ix(std::move(codes), m);
            save_index(index_out, ix);
            out << "m=" << ix.m() << " spans=";
            for (std::size_t t = 0; t < ix.m(); ++t) out << (t ? "," : "") << ix.spans()[t].length;
            out << " buckets=";
            for (std::size_t t = 0; t < ix.m(); ++t) out << (t ? "," : "") << ix.table(t).bucket_count();
            out << "\n";
            return kOk;
        }
        if (*query) {
            if (method != "miwq" && method != "linear" && method != "mih" && method != "single") {
                err << "error: unknown method '" << method << "' (expected miwq, linear, mih or single)\n";
                return kUsage;
            }
            if (K < 1) throw ArgumentError("--k must be at least 1");
            for (const auto* p : {&q_index, &q_weights, &q_queries}) check_input_path(*p);
            const MultiIndex ix = load_index(q_index);
            const WeightTable w = load_weights(q_weights);
            const CodeSet queries = load_codes(q_queries);
            detail::check_same_length(w.size(), ix.bits(), "weights vs index");
            if (queries.size() > 0) detail::check_same_length(queries.bits(), ix.bits(), "queries vs index");
            std::vector<std::string> lines;
            if (method == "miwq") {
                std::vector<MultiIndexSearcher> searchers;
                for (unsigned t = 0; t < std::max(1u, threads); ++t) searchers.emplace_back(ix);
                lines = run_queries(queries.size(), threads, [&](std::size_t i, unsigned t) {
                    return format_result(i, searchers[t].search(queries.code(i), w, K));
                });
            } else if (method == "linear") {
                lines = run_queries(queries.size(), threads, [&](std::size_t i, unsigned) {
                    return format_result(i, linear_scan_topk(ix.codes(), queries.code(i), w, K));
                });
            } else if (method == "mih") {
                lines = run_queries(queries.size(), threads, [&](std::size_t i, unsigned) {
                    return format_result(i, mih_weighted_topk(ix, queries.code(i), w, K));
                });
            } else {
                const SingleIndexTable single(ix.codes());
                lines = run_queries(queries.size(), threads, [&](std::size_t i, unsigned) {
                    return format_result(i, query_single(single, queries.code(i), w, K));
                });
            }
            for (const auto& l : lines) out << l << "\n";
            return kOk;
        }
        if (*verify) {
            if (vcfg.trials == 0) {
                err << "warning: trials=0, nothing was checked\n";
                out << "PASS (vacuous)\n";
                return kOk;
            }
            const auto rep = run_verification(vcfg);
            for (const auto& f : rep.failures) out << "FAIL " << f << "\n";
            out << (rep.passed() ? "PASS" : "FAIL") << " trials=" << rep.trials
                << " enumerator_checks=" << rep.enumerator_checks << " query_checks=" << rep.query_checks
                << "\n";
            return rep.passed() ? kOk : kVerifyFailed;
        }
        if (*bench) {
            if (!csv_out.empty()) check_output_path(csv_out);
            if (!json_out.empty()) check_output_path(json_out);
            std::ifstream in(config_path);
            if (!in) throw IoError("cannot open config " + config_path);
            std::stringstream text;
            text << in.rdbuf();
            BenchConfig cfg = parse_bench_config(text.str());
            if (const char* env = std::getenv("WHAM_SEED"); env && *env) {
                try {
                    cfg.seed = std::stoull(env);
                } catch (const std::exception&) {
                    throw ArgumentError("WHAM_SEED must be an unsigned integer");
                }
            }
            err << "seed=" << cfg.seed << "\n";
            const BenchReport report = run_benchmark(cfg);
            if (csv_out.empty()) {
                write_csv(out, report.records);
            } else {
                std::ofstream csv(csv_out);
                if (!csv) throw IoError("cannot open " + csv_out + " for writing");
                write_csv(csv, report.records);
            }
            if (!json_out.empty()) {
                std::ofstream js(json_out);
                if (!js) throw IoError("cannot open " + json_out + " for writing");
                js << to_json(report).dump(2) << "\n";
            }
            return kOk;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}

}  // namespace wham::cli
