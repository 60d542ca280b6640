#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "code.hpp"

namespace wham {

/// Hash table from a <= 64-bit key to the ids stored under it.
///
/// Ids are grouped per key in a single array; each bucket keeps insertion
/// order. Keys of at most `dense_limit` bits use a direct 2^bits offset array,
/// wider keys a hash map over the non-empty buckets.
class BucketTable {
public:
    static constexpr unsigned kDefaultDenseLimit = 20;

    BucketTable() = default;

    /// Id i is stored under keys[i].
    BucketTable(unsigned key_bits, std::span<const std::uint64_t> keys,
                unsigned dense_limit = kDefaultDenseLimit)
        : key_bits_(key_bits), dense_(key_bits <= dense_limit) {
        std::vector<Id> ids(keys.size());
        std::iota(ids.begin(), ids.end(), Id{0});
        std::stable_sort(ids.begin(), ids.end(),
                         [&](Id a, Id b) { return keys[a] < keys[b]; });
        std::vector<std::uint64_t> uniq;
        std::vector<std::size_t> starts;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i == 0 || keys[ids[i]] != keys[ids[i - 1]]) {
                uniq.push_back(keys[ids[i]]);
                starts.push_back(i);
            }
        }
        starts.push_back(ids.size());
        assemble(std::move(uniq), std::move(starts), std::move(ids));
    }

    /// Rebuilds a table from explicit buckets given in ascending key order.
    static BucketTable from_buckets(unsigned key_bits, std::vector<std::uint64_t> keys,
                                    std::vector<std::size_t> starts, std::vector<Id> ids,
                                    unsigned dense_limit = kDefaultDenseLimit) {
        BucketTable t;
        t.key_bits_ = key_bits;
        t.dense_ = key_bits <= dense_limit;
        t.assemble(std::move(keys), std::move(starts), std::move(ids));
        return t;
    }

    unsigned key_bits() const noexcept { return key_bits_; }
    std::size_t postings() const noexcept { return ids_.size(); }
    std::size_t bucket_count() const noexcept { return keys_.size(); }

    std::span<const Id> bucket(std::uint64_t key) const noexcept {
        const auto [lo, hi] = range(key);
        return {ids_.data() + lo, hi - lo};
    }

    /// Positions [first, second) of the bucket's ids within ids().
    std::pair<std::size_t, std::size_t> range(std::uint64_t key) const noexcept {
        if (dense_) {
            if (key_bits_ < 64 && (key >> key_bits_) != 0) return {0, 0};
            return {dense_offsets_[key], dense_offsets_[key + 1]};
        }
        const auto it = lookup_.find(key);
        if (it == lookup_.end()) return {0, 0};
        const std::size_t b = it->second;
        return {starts_[b], starts_[b + 1]};
    }

    /// All postings, grouped by bucket in ascending key order.
    std::span<const Id> ids() const noexcept { return ids_; }

    /// Non-empty buckets in ascending key order.
    template <class F>
    void for_each_bucket(F&& f) const {
        for (std::size_t b = 0; b < keys_.size(); ++b) {
            f(keys_[b], std::span<const Id>(ids_.data() + starts_[b], starts_[b + 1] - starts_[b]));
        }
    }

private:
    void assemble(std::vector<std::uint64_t> keys, std::vector<std::size_t> starts,
                  std::vector<Id> ids) {
        keys_ = std::move(keys);
        starts_ = std::move(starts);
        ids_ = std::move(ids);
        if (dense_) {
            dense_offsets_.assign((std::size_t{1} << key_bits_) + 1, 0);
            for (std::size_t b = 0; b < keys_.size(); ++b) {
                dense_offsets_[keys_[b] + 1] = starts_[b + 1] - starts_[b];
            }
            std::partial_sum(dense_offsets_.begin(), dense_offsets_.end(), dense_offsets_.begin());
        } else {
            lookup_.reserve(keys_.size());
            for (std::size_t b = 0; b < keys_.size(); ++b) lookup_.emplace(keys_[b], b);
        }
    }

    unsigned key_bits_ = 0;
    bool dense_ = false;
    std::vector<Id> ids_;
    std::vector<std::uint64_t> keys_;
    std::vector<std::size_t> starts_{0};
    std::vector<std::size_t> dense_offsets_;
    std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

}  // namespace wham
