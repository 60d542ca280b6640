#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <vector>

#include "code.hpp"

namespace wham {

struct Neighbor {
    Id id = 0;
    double distance = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Result order: ascending distance, then ascending id.
inline bool ranks_before(const Neighbor& a, const Neighbor& b) noexcept {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}

using NeighborList = std::vector<Neighbor>;

/// Keeps the `capacity` best neighbors seen so far; the root is the worst of them.
class BoundedMaxHeap {
public:
    explicit BoundedMaxHeap(std::size_t capacity) : capacity_(capacity) {
        entries_.reserve(capacity);
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool full() const noexcept { return entries_.size() >= capacity_; }
    const Neighbor& root() const noexcept { return entries_.front(); }

    /// Admits `n` if there is room or it ranks before the root. Returns whether it was kept.
    bool offer(const Neighbor& n) {
        if (capacity_ == 0) return false;
        if (!full()) {
            entries_.push_back(n);
            std::push_heap(entries_.begin(), entries_.end(), ranks_before);
            return true;
        }
        if (!ranks_before(n, entries_.front())) return false;
        std::pop_heap(entries_.begin(), entries_.end(), ranks_before);
        entries_.back() = n;
        std::push_heap(entries_.begin(), entries_.end(), ranks_before);
        return true;
    }

    NeighborList sorted() && {
        std::sort_heap(entries_.begin(), entries_.end(), ranks_before);
        return std::move(entries_);
    }

    NeighborList sorted() const& {
        NeighborList out = entries_;
        std::sort(out.begin(), out.end(), ranks_before);
        return out;
    }

private:
    std::size_t capacity_;
    NeighborList entries_;
};

}  // namespace wham
