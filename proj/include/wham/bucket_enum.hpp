#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "chunk_lut.hpp"
#include "code.hpp"

namespace wham {

inline constexpr std::size_t kMaxEnumBits = 64;

/// A bucket described relative to the minimal code h of a context.
///
/// `changed` has bit j set when the j-th ranked bit (ctx.order()[j]) is
/// flipped away from h. `bucket` is the resulting code as a word and `weight`
/// its folded distance.
struct ChangePattern {
    std::uint64_t changed = 0;
    std::uint64_t bucket = 0;
    double weight = 0.0;

    bool empty() const noexcept { return changed == 0; }

    /// Largest ranked position in `changed`, or -1 for h itself.
    int rightmost() const noexcept { return changed == 0 ? -1 : 63 - std::countl_zero(changed); }

    friend bool operator==(const ChangePattern&, const ChangePattern&) = default;
};

namespace detail {

inline void check_enum_bits(std::size_t bits) {
    if (bits > kMaxEnumBits) {
        throw UnsupportedLengthError("bucket enumeration supports at most 64 bits per table, got " +
                                     std::to_string(bits));
    }
}

inline std::uint64_t rank_mask(const QueryContext& ctx, std::size_t rank) noexcept {
    return std::uint64_t{1} << ctx.order()[rank];
}

}  // namespace detail

inline ChangePattern initial_pattern(const QueryContext& ctx) {
    detail::check_enum_bits(ctx.size());
    return {0, ctx.minimal().word(0, ctx.size()), ctx.base_weight()};
}

/// Flip the unchanged ranked bit right after the rightmost changed one
/// (the first ranked bit when nothing is changed yet).
template <class Weigh>
std::optional<ChangePattern> operation1(const ChangePattern& p, const QueryContext& ctx,
                                        Weigh&& weigh) {
    const auto next = static_cast<std::size_t>(p.rightmost() + 1);
    if (next >= ctx.size()) return std::nullopt;
    ChangePattern c;
    c.changed = p.changed | (std::uint64_t{1} << next);
    c.bucket = p.bucket ^ detail::rank_mask(ctx, next);
    c.weight = weigh(c.bucket);
    return c;
}

/// Move the rightmost changed ranked bit one position to the right.
template <class Weigh>
std::optional<ChangePattern> operation2(const ChangePattern& p, const QueryContext& ctx,
                                        Weigh&& weigh) {
    if (p.empty()) return std::nullopt;
    const auto r = static_cast<std::size_t>(p.rightmost());
    if (r + 1 >= ctx.size()) return std::nullopt;
    ChangePattern c;
    c.changed = (p.changed & ~(std::uint64_t{1} << r)) | (std::uint64_t{1} << (r + 1));
    c.bucket = p.bucket ^ detail::rank_mask(ctx, r) ^ detail::rank_mask(ctx, r + 1);
    c.weight = weigh(c.bucket);
    return c;
}

inline std::optional<ChangePattern> operation1(const ChangePattern& p, const QueryContext& ctx) {
    return operation1(p, ctx, [&](std::uint64_t key) { return ctx.distance(key); });
}

inline std::optional<ChangePattern> operation2(const ChangePattern& p, const QueryContext& ctx) {
    return operation2(p, ctx, [&](std::uint64_t key) { return ctx.distance(key); });
}

/// Yields every bucket of a <= 64-bit table in non-decreasing folded weight.
///
/// Best-first search over change patterns: start from h, and on every pop push
/// the operation1/operation2 successors. Each pattern has exactly one parent,
/// so every bucket is produced once. Equal weights pop in ascending bucket
/// order. The context must outlive the enumerator.
class BucketEnumerator {
public:
    struct Bucket {
        std::uint64_t key;
        double weight;
    };

    explicit BucketEnumerator(const QueryContext& ctx) : ctx_(&ctx), lut_(ctx) {
        queue_.push(initial_pattern(ctx));
    }

    std::optional<Bucket> next() {
        if (queue_.empty()) return std::nullopt;
        const ChangePattern top = queue_.top();
        queue_.pop();
        auto weigh = [this](std::uint64_t key) { return lut_.distance(key); };
        if (auto c = operation1(top, *ctx_, weigh)) queue_.push(*c);
        if (auto c = operation2(top, *ctx_, weigh)) queue_.push(*c);
        ++emitted_;
        return Bucket{top.bucket, top.weight};
    }

    /// Weight of the bucket the next call to next() will return.
    std::optional<double> peek_weight() const {
        if (queue_.empty()) return std::nullopt;
        return queue_.top().weight;
    }

    std::size_t bits() const noexcept { return ctx_->size(); }
    std::uint64_t emitted() const noexcept { return emitted_; }
    std::size_t queue_size() const noexcept { return queue_.size(); }

private:
    struct Later {
        bool operator()(const ChangePattern& a, const ChangePattern& b) const noexcept {
            if (a.weight != b.weight) return a.weight > b.weight;
            return a.bucket > b.bucket;
        }
    };

    const QueryContext* ctx_;
    ChunkLUT lut_;
    std::priority_queue<ChangePattern, std::vector<ChangePattern>, Later> queue_;
    std::uint64_t emitted_ = 0;
};

inline BucketEnumerator new_enumerator(const QueryContext& ctx) { return BucketEnumerator(ctx); }

inline std::optional<BucketEnumerator::Bucket> next_bucket(BucketEnumerator& e) { return e.next(); }

}  // namespace wham
