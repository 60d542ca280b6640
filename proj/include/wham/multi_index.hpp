#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "bucket_enum.hpp"
#include "bucket_table.hpp"
#include "chunk_lut.hpp"
#include "code.hpp"
#include "topk.hpp"

namespace wham {

/// Contiguous run of code bits indexed by one substring table.
struct Span {
    std::uint32_t start = 0;
    std::uint32_t length = 0;

    friend bool operator==(const Span&, const Span&) = default;
};

/// Substring count heuristic b / log2(n), rounded and clamped to [1, b].
inline std::size_t choose_m(std::size_t b, std::uint64_t n) {
    if (b < 1) throw ArgumentError("choose_m needs b >= 1");
    if (n < 2) throw ArgumentError("choose_m needs n >= 2");
    const double m = std::round(static_cast<double>(b) / std::log2(static_cast<double>(n)));
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(m, 1.0)), 1, b);
}

/// choose_m, raised if needed so no substring exceeds 64 bits; n < 2 gives the
/// smallest admissible m.
inline std::size_t resolve_m(std::size_t b, std::uint64_t n) {
    const std::size_t floor_m = (b + kMaxEnumBits - 1) / kMaxEnumBits;
    if (n < 2) return std::max<std::size_t>(floor_m, 1);
    return std::max(choose_m(b, n), floor_m);
}

/// First b mod m spans get ⌈b/m⌉ bits, the rest ⌊b/m⌋, left to right.
inline std::vector<Span> split_spans(std::size_t b, std::size_t m) {
    if (m < 1 || m > b) {
        throw ArgumentError("substring count m=" + std::to_string(m) + " outside [1, " +
                            std::to_string(b) + "]");
    }
    std::vector<Span> spans(m);
    std::uint32_t start = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto len = static_cast<std::uint32_t>(b / m + (i < b % m ? 1 : 0));
        spans[i] = {start, len};
        start += len;
    }
    if (spans.front().length > kMaxEnumBits) {
        throw UnsupportedLengthError("substrings longer than 64 bits are not supported (b=" +
                                     std::to_string(b) + ", m=" + std::to_string(m) + ")");
    }
    return spans;
}

/// m hash tables over disjoint substrings plus the full stored codes.
class MultiIndex {
public:
    MultiIndex() = default;

    MultiIndex(CodeSet codes, std::size_t m,
               unsigned dense_limit = BucketTable::kDefaultDenseLimit)
        : codes_(std::move(codes)), spans_(split_spans(codes_.bits(), m)) {
        tables_.reserve(m);
        std::vector<std::uint64_t> keys(codes_.size());
        for (const Span& s : spans_) {
            for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = codes_.word(i, s.start, s.length);
            tables_.emplace_back(s.length, keys, dense_limit);
        }
        copy_posting_codes();
    }

    /// Assembles an index from parts (used when loading from disk).
    MultiIndex(CodeSet codes, std::vector<Span> spans, std::vector<BucketTable> tables)
        : codes_(std::move(codes)), spans_(std::move(spans)), tables_(std::move(tables)) {
        copy_posting_codes();
    }

    std::size_t bits() const noexcept { return codes_.bits(); }
    std::size_t size() const noexcept { return codes_.size(); }
    std::size_t m() const noexcept { return spans_.size(); }
    const CodeSet& codes() const noexcept { return codes_; }
    std::span<const Span> spans() const noexcept { return spans_; }
    const BucketTable& table(std::size_t i) const noexcept { return tables_[i]; }

    /// Full codes of table i's postings, in the order of table(i).ids().
    const std::uint8_t* posting_codes(std::size_t i) const noexcept { return posting_codes_[i].data(); }

private:
    void copy_posting_codes() {
        const std::size_t stride = codes_.stride();
        posting_codes_.resize(tables_.size());
        for (std::size_t t = 0; t < tables_.size(); ++t) {
            const auto ids = tables_[t].ids();
            auto& out = posting_codes_[t];
            out.resize(ids.size() * stride);
            for (std::size_t p = 0; p < ids.size(); ++p) {
                std::memcpy(out.data() + p * stride, codes_[ids[p]].data(), stride);
            }
        }
    }

    CodeSet codes_;
    std::vector<Span> spans_;
    std::vector<BucketTable> tables_;
    std::vector<std::vector<std::uint8_t>> posting_codes_;
};

inline MultiIndex build_multi(CodeSet codes, std::size_t m) {
    return MultiIndex(std::move(codes), m);
}

inline MultiIndex build_multi(std::span<const BinaryCode> codes, std::size_t m) {
    return MultiIndex(CodeSet::from_codes(codes), m);
}

/// f(s): folded weight of substring `s` under its span context.
inline double substring_weight(std::uint64_t s, const QueryContext& span_ctx) {
    detail::check_enum_bits(span_ctx.size());
    if (span_ctx.size() < 64 && (s >> span_ctx.size()) != 0) {
        throw ArgumentError("substring has bits beyond its span");
    }
    return span_ctx.distance(s);
}

/// Lower bound on the distance of any code not yet seen, after the tables
/// order[0..probed) have been probed this round.
///
/// Probed tables contribute the weight of their new top bucket, the others the
/// weight of the bucket popped this round. Summed in table-index order.
inline double stopping_threshold(std::span<const double> popped, std::span<const double> next_tops,
                                 std::size_t probed, std::span<const std::size_t> order) {
    const std::size_t m = popped.size();
    if (next_tops.size() != m || order.size() != m || probed > m) {
        throw ArgumentError("stopping_threshold: inconsistent table counts");
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        const bool done = std::find(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(probed),
                                    t) != order.begin() + static_cast<std::ptrdiff_t>(probed);
        acc += done ? next_tops[t] : popped[t];
    }
    return acc;
}

/// Ascending Δf = next_top - popped, ties by table index.
inline std::vector<std::size_t> probe_order(std::span<const double> popped,
                                            std::span<const double> next_tops) {
    std::vector<std::size_t> order(popped.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return next_tops[a] - popped[a] < next_tops[b] - popped[b];
    });
    return order;
}

/// How the tables popped in one round are ordered for probing.
enum class ProbeOrder {
    by_delta,  // ascending growth of the bound, ties by table index
    fixed,     // table index order
};

struct QueryStats {
    std::uint64_t rounds = 0;
    std::uint64_t buckets_probed = 0;
    std::uint64_t candidates = 0;  // full-distance evaluations
    double final_bound = 0.0;      // last Ŝ (+inf when a table ran dry)
};

namespace detail {

struct HashSeen {
    std::unordered_set<Id> ids;
    bool insert(Id id) { return ids.insert(id).second; }
};

// One bit per id; only the bits set by the previous query are cleared.
class BitSeen {
public:
    explicit BitSeen(std::size_t n) : words_((n + 63) / 64, 0) {}

    void next_query() {
        for (Id id : touched_) words_[id >> 6] = 0;
        touched_.clear();
    }

    bool insert(Id id) {
        std::uint64_t& w = words_[id >> 6];
        const std::uint64_t bit = std::uint64_t{1} << (id & 63);
        if (w & bit) return false;
        w |= bit;
        touched_.push_back(id);
        return true;
    }

private:
    std::vector<std::uint64_t> words_;
    std::vector<Id> touched_;
};

template <class Seen>
NeighborList miwq_search(const MultiIndex& ix, const BinaryCode& q, const WeightTable& w,
                         std::size_t K, Seen& seen, QueryStats* stats,
                         ProbeOrder policy = ProbeOrder::by_delta) {
    if (K < 1) throw ArgumentError("K must be at least 1");
    QueryStats local;
    QueryStats& st = stats ? *stats : local;
    st = {};
    if (ix.size() == 0) return {};
    check_same_length(q.size(), ix.bits(), "query_multi");
    check_same_length(w.size(), ix.bits(), "query_multi");

    const std::size_t m = ix.m();
    const QueryContext full(q, w);
    const ChunkLUT lut(full);
    const std::size_t stride = ix.codes().stride();

    std::vector<QueryContext> span_ctx;
    span_ctx.reserve(m);
    for (const Span& s : ix.spans()) span_ctx.push_back(full.slice(s.start, s.length));
    std::vector<BucketEnumerator> queues;
    queues.reserve(m);
    for (const auto& c : span_ctx) queues.emplace_back(c);

    const std::size_t cap = std::min<std::size_t>(K, ix.size());
    BoundedMaxHeap heap(cap);
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<std::uint64_t> keys(m);
    std::vector<double> popped(m), next_tops(m);
    std::vector<std::size_t> order(m);

    for (;;) {
        for (std::size_t t = 0; t < m; ++t) {
            const auto b = queues[t].next();
            if (!b) {
                // Table t has been probed completely, so every id was already evaluated.
                st.final_bound = inf;
                return std::move(heap).sorted();
            }
            keys[t] = b->key;
            popped[t] = b->weight;
            next_tops[t] = queues[t].peek_weight().value_or(inf);
        }
        ++st.rounds;
        if (policy == ProbeOrder::by_delta) {
            order = probe_order(popped, next_tops);
        } else {
            std::iota(order.begin(), order.end(), std::size_t{0});
        }

        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t t = order[j];
            const auto [lo, hi] = ix.table(t).range(keys[t]);
            const Id* ids = ix.table(t).ids().data();
            const std::uint8_t* codes = ix.posting_codes(t);
            for (std::size_t p = lo; p < hi; ++p) {
                if (!seen.insert(ids[p])) continue;
                ++st.candidates;
                heap.offer({ids[p], lut.distance(codes + p * stride)});
            }
            ++st.buckets_probed;

            const double bound = stopping_threshold(popped, next_tops, j + 1, order);
            st.final_bound = bound;
            // Strict: an unseen code at exactly the bound could still win on id.
            if (heap.full() && heap.root().distance < bound) return std::move(heap).sorted();
        }
    }
}

}  // namespace detail

/// Exact weighted K-NN over a multi-index: the same (distance, id) list a
/// linear scan returns.
///
/// Each round pops the best remaining bucket of every substring table, probes
/// them in ascending order of how much the bound grows when that table
/// advances, and stops as soon as the K-th best candidate is closer than the
/// bound on everything not yet seen.
inline NeighborList query_multi(const MultiIndex& ix, const BinaryCode& q, const WeightTable& w,
                                std::size_t K, QueryStats* stats = nullptr,
                                ProbeOrder policy = ProbeOrder::by_delta) {
    detail::HashSeen seen;
    return detail::miwq_search(ix, q, w, K, seen, stats, policy);
}

/// Reusable per-thread search state for repeated queries on one index.
class MultiIndexSearcher {
public:
    explicit MultiIndexSearcher(const MultiIndex& ix) : ix_(&ix), seen_(ix.size()) {}

    NeighborList search(const BinaryCode& q, const WeightTable& w, std::size_t K,
                        QueryStats* stats = nullptr, ProbeOrder policy = ProbeOrder::by_delta) {
        seen_.next_query();
        return detail::miwq_search(*ix_, q, w, K, seen_, stats, policy);
    }

private:
    const MultiIndex* ix_;
    detail::BitSeen seen_;
};

}  // namespace wham
