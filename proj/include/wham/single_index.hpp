#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bucket_enum.hpp"
#include "bucket_table.hpp"
#include "code.hpp"
#include "topk.hpp"

namespace wham {

inline constexpr std::size_t kMaxSingleIndexBits = 32;

/// One hash table keyed by the full code (b <= 32).
class SingleIndexTable {
public:
    SingleIndexTable() = default;

    explicit SingleIndexTable(CodeSet codes, unsigned dense_limit = BucketTable::kDefaultDenseLimit)
        : codes_(std::move(codes)) {
        if (codes_.bits() > kMaxSingleIndexBits) {
            throw UnsupportedLengthError("single-index tables support at most 32-bit codes; use a "
                                         "multi-index for " +
                                         std::to_string(codes_.bits()) + " bits");
        }
        std::vector<std::uint64_t> keys(codes_.size());
        for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = codes_.word(i, 0, codes_.bits());
        table_ = BucketTable(static_cast<unsigned>(codes_.bits()), keys, dense_limit);
    }

    std::size_t bits() const noexcept { return codes_.bits(); }
    std::size_t size() const noexcept { return codes_.size(); }
    const CodeSet& codes() const noexcept { return codes_; }
    const BucketTable& table() const noexcept { return table_; }

private:
    CodeSet codes_;
    BucketTable table_;
};

inline SingleIndexTable build_single(CodeSet codes) { return SingleIndexTable(std::move(codes)); }

inline SingleIndexTable build_single(std::span<const BinaryCode> codes) {
    return SingleIndexTable(CodeSet::from_codes(codes));
}

struct SingleQueryStats {
    std::uint64_t buckets_probed = 0;
    /// Weight of the next bucket the enumerator would have produced (+inf if exhausted).
    double next_bucket_weight = 0.0;
};

/// Probes buckets in ascending folded weight until at least K ids are collected
/// and no unprobed bucket can tie the K-th distance.
inline NeighborList query_single(const SingleIndexTable& t, const BinaryCode& q,
                                 const WeightTable& w, std::size_t K,
                                 SingleQueryStats* stats = nullptr) {
    if (K < 1) throw ArgumentError("K must be at least 1");
    if (t.size() == 0) return {};
    detail::check_same_length(q.size(), t.bits(), "query_single");
    detail::check_same_length(w.size(), t.bits(), "query_single");

    const QueryContext ctx(q, w);
    const ChunkLUT lut(ctx);
    BucketEnumerator e(ctx);
    NeighborList found;
    std::uint64_t probed = 0;
    // Bucket weights arrive in non-decreasing order and equal the distances of
    // their codes, so found[K-1] is the K-th distance once K ids are in. Buckets
    // tied with it are still probed so that ties resolve by id.
    for (;;) {
        const auto next = e.peek_weight();
        if (!next || (found.size() >= K && *next > found[K - 1].distance)) break;
        const auto b = e.next();
        ++probed;
        for (Id id : t.table().bucket(b->key)) found.push_back({id, lut.distance(t.codes()[id])});
    }
    std::sort(found.begin(), found.end(), ranks_before);
    if (found.size() > K) found.resize(K);
    if (stats) {
        stats->buckets_probed = probed;
        stats->next_bucket_weight =
            e.peek_weight().value_or(std::numeric_limits<double>::infinity());
    }
    return found;
}

}  // namespace wham
