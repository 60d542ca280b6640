#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "chunk_lut.hpp"
#include "code.hpp"
#include "multi_index.hpp"
#include "topk.hpp"

namespace wham {

/// Exhaustive weighted K-NN: every code is scored through the chunk look-up
/// tables and kept in a K-bounded max-heap. Ground truth for everything else.
inline NeighborList linear_scan_topk(const CodeSet& codes, const BinaryCode& q,
                                     const WeightTable& w, std::size_t K) {
    if (K < 1) throw ArgumentError("K must be at least 1");
    if (codes.size() == 0) return {};
    detail::check_same_length(q.size(), codes.bits(), "linear_scan_topk");
    detail::check_same_length(w.size(), codes.bits(), "linear_scan_topk");

    const ChunkLUT lut(QueryContext(q, w));
    BoundedMaxHeap heap(std::min(K, codes.size()));
    const std::uint8_t* row = codes.raw().data();
    const std::size_t stride = codes.stride();
    const std::size_t n = codes.size();
    std::size_t i = 0;
    for (; i < n && !heap.full(); ++i, row += stride) heap.offer({i, lut.distance(row)});
    double worst = heap.root().distance;
    for (; i < n; ++i, row += stride) {
        const double d = lut.distance(row);
        if (d > worst) continue;
        if (heap.offer({i, d})) worst = heap.root().distance;
    }
    return std::move(heap).sorted();
}

struct MihStats {
    std::uint64_t buckets_probed = 0;
    std::uint64_t candidates = 0;  // distinct ids verified with full Hamming distance
    int radius = 0;                // final Hamming search radius
};

namespace detail {

// Calls f(key) for every key at exactly `radius` Hamming distance from `center` within `len` bits.
template <class F>
void for_each_at_radius(std::uint64_t center, std::size_t len, std::size_t radius, F&& f) {
    if (radius > len) return;
    std::vector<std::size_t> pos(radius);
    std::function<void(std::size_t, std::size_t, std::uint64_t)> rec =
        [&](std::size_t depth, std::size_t from, std::uint64_t key) {
            if (depth == radius) {
                f(key);
                return;
            }
            for (std::size_t p = from; p + (radius - depth) <= len; ++p) {
                rec(depth + 1, p + 1, key ^ (std::uint64_t{1} << p));
            }
        };
    rec(0, 0, center);
}

}  // namespace detail

/// Weighted K-NN the multi-index-hashing way: grow a Hamming radius until at
/// least K codes are known to lie within it, then re-rank those codes by
/// weighted distance. Fast, but can miss codes that are far in Hamming terms
/// and near in weighted terms.
///
/// Radius r is complete once every table has been probed out to substring
/// radius ⌊r/m⌋: a code within r of the query matches some substring within
/// that radius.
inline NeighborList mih_weighted_topk(const MultiIndex& ix, const BinaryCode& q,
                                      const WeightTable& w, std::size_t K,
                                      MihStats* stats = nullptr) {
    if (K < 1) throw ArgumentError("K must be at least 1");
    MihStats local;
    MihStats& st = stats ? *stats : local;
    st = {};
    if (ix.size() == 0) return {};
    detail::check_same_length(q.size(), ix.bits(), "mih_weighted_topk");
    detail::check_same_length(w.size(), ix.bits(), "mih_weighted_topk");

    const ChunkLUT lut(QueryContext(q, w));
    const CodeSet& codes = ix.codes();
    const std::size_t n = ix.size();

    auto rank_all = [&](const std::vector<Id>& ids) {
        NeighborList out;
        out.reserve(ids.size());
        for (Id id : ids) out.push_back({id, lut.distance(codes[id])});
        std::sort(out.begin(), out.end(), ranks_before);
        if (out.size() > K) out.resize(K);
        return out;
    };

    if (K >= n) {
        std::vector<Id> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        st.candidates = n;
        st.radius = static_cast<int>(ix.bits());
        return rank_all(all);
    }

    const std::size_t m = ix.m();
    std::vector<std::uint64_t> qkeys(m);
    for (std::size_t t = 0; t < m; ++t) qkeys[t] = q.word(ix.spans()[t].start, ix.spans()[t].length);

    std::unordered_map<Id, int> verified;  // id -> full Hamming distance
    std::vector<std::size_t> count_at(ix.bits() + 1, 0);
    std::vector<long> table_radius(m, -1);
    std::size_t within = 0;

    for (std::size_t r = 0; r <= ix.bits(); ++r) {
        const auto sub = static_cast<long>(r / m);
        for (std::size_t t = 0; t < m; ++t) {
            const std::size_t len = ix.spans()[t].length;
            while (table_radius[t] < sub && table_radius[t] < static_cast<long>(len)) {
                ++table_radius[t];
                detail::for_each_at_radius(
                    qkeys[t], len, static_cast<std::size_t>(table_radius[t]),
                    [&](std::uint64_t key) {
                        ++st.buckets_probed;
                        for (Id id : ix.table(t).bucket(key)) {
                            if (verified.contains(id)) continue;
                            const int h = hamming_distance(q.bytes(), codes[id]);
                            verified.emplace(id, h);
                            ++count_at[static_cast<std::size_t>(h)];
                        }
                    });
            }
        }
        within += count_at[r];
        if (within >= K) {
            std::vector<Id> pool;
            pool.reserve(within);
            for (const auto& [id, h] : verified) {
                if (static_cast<std::size_t>(h) <= r) pool.push_back(id);
            }
            st.candidates = verified.size();
            st.radius = static_cast<int>(r);
            return rank_all(pool);
        }
    }
    // Unreachable: radius b covers every code and K < n.
    return {};
}

}  // namespace wham
