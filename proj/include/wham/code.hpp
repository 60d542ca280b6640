#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace wham {

inline constexpr std::size_t kMaxBits = 256;

using Id = std::uint64_t;

constexpr std::size_t bytes_for(std::size_t bits) noexcept { return (bits + 7) / 8; }

namespace detail {

inline void check_bits(std::size_t bits) {
    if (bits == 0 || bits > kMaxBits) {
        throw UnsupportedLengthError("code length " + std::to_string(bits) + " outside [1, " +
                                     std::to_string(kMaxBits) + "]");
    }
}

// Bits [start, start + len) of a canonically packed code, bit `start` landing in bit 0.
inline std::uint64_t extract_bits(const std::uint8_t* bytes, std::size_t start,
                                  std::size_t len) noexcept {
    const std::size_t first = start / 8;
    const std::size_t shift = start % 8;
    const std::size_t need = (shift + len + 7) / 8;
    unsigned __int128 acc = 0;
    for (std::size_t k = 0; k < need; ++k) {
        acc |= static_cast<unsigned __int128>(bytes[first + k]) << (8 * k);
    }
    auto out = static_cast<std::uint64_t>(acc >> shift);
    if (len < 64) out &= (std::uint64_t{1} << len) - 1;
    return out;
}

inline std::uint8_t padding_mask(std::size_t bits) noexcept {
    const std::size_t used = bits % 8;
    return used == 0 ? std::uint8_t{0} : static_cast<std::uint8_t>(0xFFu << used);
}

}  // namespace detail

/// A b-bit binary code, 1 <= b <= 256.
///
/// Bit i (0-based here) lives in byte i / 8 at position i % 8. Padding bits in
/// the last byte are always zero, so byte-wise equality is code equality.
class BinaryCode {
public:
    BinaryCode() = default;

    explicit BinaryCode(std::size_t bits) : bits_(static_cast<std::uint16_t>(bits)) {
        detail::check_bits(bits);
    }

    static BinaryCode from_bytes(std::span<const std::uint8_t> bytes, std::size_t bits) {
        BinaryCode c(bits);
        if (bytes.size() != c.byte_size()) {
            throw DimensionError("expected " + std::to_string(c.byte_size()) + " bytes for a " +
                                 std::to_string(bits) + "-bit code, got " +
                                 std::to_string(bytes.size()));
        }
        if ((bytes.back() & detail::padding_mask(bits)) != 0) {
            throw ArgumentError("padding bits of a " + std::to_string(bits) +
                                "-bit code must be zero");
        }
        std::copy(bytes.begin(), bytes.end(), c.bytes_.begin());
        return c;
    }

    /// Low `bits` bits of `word`; word bit j becomes code bit j.
    static BinaryCode from_word(std::uint64_t word, std::size_t bits) {
        if (bits > 64) throw UnsupportedLengthError("from_word supports at most 64 bits");
        BinaryCode c(bits);
        if (bits < 64) word &= (std::uint64_t{1} << bits) - 1;
        for (std::size_t k = 0; k < c.byte_size(); ++k) {
            c.bytes_[k] = static_cast<std::uint8_t>(word >> (8 * k));
        }
        return c;
    }

    /// "0110" -> first character is bit 0.
    static BinaryCode from_string(std::string_view s) {
        BinaryCode c(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1') {
                c.set(i, true);
            } else if (s[i] != '0') {
                throw ArgumentError("binary string may contain only '0' and '1'");
            }
        }
        return c;
    }

    std::size_t size() const noexcept { return bits_; }
    std::size_t byte_size() const noexcept { return bytes_for(bits_); }

    bool bit(std::size_t i) const noexcept { return (bytes_[i / 8] >> (i % 8)) & 1u; }

    void set(std::size_t i, bool v) noexcept {
        const auto m = static_cast<std::uint8_t>(1u << (i % 8));
        if (v) {
            bytes_[i / 8] |= m;
        } else {
            bytes_[i / 8] &= static_cast<std::uint8_t>(~m);
        }
    }

    void flip(std::size_t i) noexcept { bytes_[i / 8] ^= static_cast<std::uint8_t>(1u << (i % 8)); }

    std::span<const std::uint8_t> bytes() const noexcept { return {bytes_.data(), byte_size()}; }

    std::uint64_t word(std::size_t start, std::size_t len) const noexcept {
        return detail::extract_bits(bytes_.data(), start, len);
    }

    std::string to_string() const {
        std::string s(bits_, '0');
        for (std::size_t i = 0; i < bits_; ++i) s[i] = bit(i) ? '1' : '0';
        return s;
    }

    friend bool operator==(const BinaryCode& a, const BinaryCode& b) noexcept {
        return a.bits_ == b.bits_ && a.bytes_ == b.bytes_;
    }

private:
    std::array<std::uint8_t, kMaxBits / 8> bytes_{};
    std::uint16_t bits_ = 0;
};

/// n codes of equal length stored back to back, ⌈b/8⌉ bytes each.
class CodeSet {
public:
    CodeSet() = default;

    explicit CodeSet(std::size_t bits) : bits_(bits), stride_(bytes_for(bits)) {
        detail::check_bits(bits);
    }

    static CodeSet from_codes(std::span<const BinaryCode> codes) {
        if (codes.empty()) return {};
        CodeSet set(codes.front().size());
        set.reserve(codes.size());
        for (const auto& c : codes) set.push_back(c);
        return set;
    }

    std::size_t bits() const noexcept { return bits_; }
    std::size_t stride() const noexcept { return stride_; }
    std::size_t size() const noexcept { return stride_ == 0 ? 0 : data_.size() / stride_; }
    bool empty() const noexcept { return data_.empty(); }

    void reserve(std::size_t n) { data_.reserve(n * stride_); }

    void push_back(const BinaryCode& c) {
        if (c.size() != bits_) {
            throw DimensionError("code of " + std::to_string(c.size()) +
                                 " bits added to a set of " + std::to_string(bits_) + "-bit codes");
        }
        data_.insert(data_.end(), c.bytes().begin(), c.bytes().end());
    }

    std::span<const std::uint8_t> operator[](std::size_t i) const noexcept {
        return {data_.data() + i * stride_, stride_};
    }

    BinaryCode code(std::size_t i) const { return BinaryCode::from_bytes((*this)[i], bits_); }

    std::uint64_t word(std::size_t i, std::size_t start, std::size_t len) const noexcept {
        return detail::extract_bits(data_.data() + i * stride_, start, len);
    }

    std::span<const std::uint8_t> raw() const noexcept { return data_; }

    /// Takes ownership of packed bytes; validates length and padding.
    static CodeSet from_raw(std::size_t bits, std::vector<std::uint8_t> data) {
        CodeSet set(bits);
        if (data.size() % set.stride_ != 0) {
            throw DimensionError("packed code buffer is not a multiple of the code stride");
        }
        const auto mask = detail::padding_mask(bits);
        for (std::size_t off = set.stride_ - 1; off < data.size(); off += set.stride_) {
            if ((data[off] & mask) != 0) {
                throw ArgumentError("nonzero padding in code " + std::to_string(off / set.stride_));
            }
        }
        set.data_ = std::move(data);
        return set;
    }

    friend bool operator==(const CodeSet&, const CodeSet&) = default;

private:
    std::size_t bits_ = 0;
    std::size_t stride_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Per-bit weight functions: entry i holds (w_i(0), w_i(1)).
class WeightTable {
public:
    using Entry = std::array<double, 2>;

    WeightTable() = default;

    explicit WeightTable(std::vector<Entry> entries) : entries_(std::move(entries)) {
        detail::check_bits(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            for (double v : entries_[i]) {
                if (!std::isfinite(v) || v < 0.0) {
                    throw InvalidWeightError("weight for bit " + std::to_string(i) +
                                             " must be finite and non-negative");
                }
            }
        }
    }

    /// w_i(0) = 0, w_i(1) = 1: weighted distance becomes Hamming distance.
    static WeightTable unit(std::size_t bits) {
        return WeightTable(std::vector<Entry>(bits, Entry{0.0, 1.0}));
    }

    std::size_t size() const noexcept { return entries_.size(); }
    double operator()(std::size_t i, unsigned x) const noexcept { return entries_[i][x]; }
    std::span<const Entry> entries() const noexcept { return entries_; }

    friend bool operator==(const WeightTable&, const WeightTable&) = default;

private:
    std::vector<Entry> entries_;
};

namespace detail {

// Canonical accumulation order for every weighted sum in the library: bits are
// summed left to right inside each 8-bit chunk, then chunk sums are added left
// to right. The chunk look-up tables reproduce exactly these operations.
template <class Term>
double chunked_sum(std::size_t bits, Term&& term) {
    double acc = 0.0;
    for (std::size_t c = 0; c < bits; c += 8) {
        const std::size_t end = std::min(c + 8, bits);
        double part = 0.0;
        for (std::size_t i = c; i < end; ++i) part += term(i);
        acc += part;
    }
    return acc;
}

inline unsigned bit_at(std::span<const std::uint8_t> bytes, std::size_t i) noexcept {
    return (bytes[i / 8] >> (i % 8)) & 1u;
}

inline void check_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

}  // namespace detail

/// Σ_i w_i(q_i xor g_i).
inline double weighted_distance(const BinaryCode& q, const BinaryCode& g, const WeightTable& w) {
    detail::check_same_length(q.size(), g.size(), "weighted_distance");
    detail::check_same_length(q.size(), w.size(), "weighted_distance");
    return detail::chunked_sum(q.size(), [&](std::size_t i) {
        return w(i, static_cast<unsigned>(q.bit(i) ^ g.bit(i)));
    });
}

inline int hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    detail::check_same_length(a.size(), b.size(), "hamming_distance");
    int d = 0;
    std::size_t k = 0;
    for (; k + 8 <= a.size(); k += 8) {
        std::uint64_t x = 0, y = 0;
        std::memcpy(&x, a.data() + k, 8);
        std::memcpy(&y, b.data() + k, 8);
        d += std::popcount(x ^ y);
    }
    for (; k < a.size(); ++k) d += std::popcount(static_cast<unsigned>(a[k] ^ b[k]));
    return d;
}

inline int hamming_distance(const BinaryCode& q, const BinaryCode& g) {
    detail::check_same_length(q.size(), g.size(), "hamming_distance");
    return hamming_distance(q.bytes(), g.bytes());
}

/// Query-folded weights for one query (or one substring of it).
///
/// folded()[i] = (ŵ_i(0), ŵ_i(1)) with ŵ_i(x) = w_i(x xor q_i), so distance
/// to the query depends on the database bit alone. minimal() picks the cheaper
/// side of every bit (0 on ties); deltas()[i] is the extra cost of flipping
/// bit i of minimal(); order() lists bits by ascending delta, ties by index.
class QueryContext {
public:
    using Entry = WeightTable::Entry;

    QueryContext(const BinaryCode& q, const WeightTable& w) {
        detail::check_same_length(q.size(), w.size(), "build_query_context");
        std::vector<Entry> folded(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            const unsigned qi = q.bit(i);
            folded[i] = {w(i, qi), w(i, 1u ^ qi)};
        }
        init(std::move(folded));
    }

    /// Context over already-folded weights, e.g. one substring of a full context.
    static QueryContext from_folded(std::vector<Entry> folded) {
        detail::check_bits(folded.size());
        for (const auto& e : folded) {
            if (!std::isfinite(e[0]) || !std::isfinite(e[1]) || e[0] < 0.0 || e[1] < 0.0) {
                throw InvalidWeightError("folded weights must be finite and non-negative");
            }
        }
        QueryContext ctx;
        ctx.init(std::move(folded));
        return ctx;
    }

    QueryContext slice(std::size_t start, std::size_t len) const {
        if (start + len > size() || len == 0) throw ArgumentError("slice outside the context");
        return from_folded({folded_.begin() + static_cast<std::ptrdiff_t>(start),
                            folded_.begin() + static_cast<std::ptrdiff_t>(start + len)});
    }

    std::size_t size() const noexcept { return folded_.size(); }
    std::span<const Entry> folded() const noexcept { return folded_; }
    const BinaryCode& minimal() const noexcept { return minimal_; }
    double base_weight() const noexcept { return base_weight_; }
    std::span<const double> deltas() const noexcept { return deltas_; }
    std::span<const std::uint16_t> order() const noexcept { return order_; }

    /// Σ_i ŵ_i(g_i) over a packed code of size() bits.
    double distance(std::span<const std::uint8_t> g) const noexcept {
        return detail::chunked_sum(size(), [&](std::size_t i) {
            return folded_[i][detail::bit_at(g, i)];
        });
    }

    /// Same as distance() for a code of at most 64 bits held in a word.
    double distance(std::uint64_t key) const noexcept {
        return detail::chunked_sum(size(), [&](std::size_t i) {
            return folded_[i][(key >> i) & 1u];
        });
    }

    /// Test hook: swaps the first and last ranked bits so the ranking is no
    /// longer ascending. Used only to check that verification catches it.
    friend QueryContext inject_order_fault(QueryContext ctx) {
        if (ctx.order_.size() > 1) std::swap(ctx.order_.front(), ctx.order_.back());
        return ctx;
    }

private:
    QueryContext() = default;

    void init(std::vector<Entry> folded) {
        folded_ = std::move(folded);
        const std::size_t b = folded_.size();
        minimal_ = BinaryCode(b);
        deltas_.resize(b);
        for (std::size_t i = 0; i < b; ++i) {
            const bool one = folded_[i][1] < folded_[i][0];
            minimal_.set(i, one);
            deltas_[i] = folded_[i][one ? 0 : 1] - folded_[i][one ? 1 : 0];
        }
        base_weight_ = distance(minimal_.bytes());
        order_.resize(b);
        std::iota(order_.begin(), order_.end(), std::uint16_t{0});
        std::stable_sort(order_.begin(), order_.end(), [&](std::uint16_t a, std::uint16_t c) {
            return deltas_[a] < deltas_[c];
        });
    }

    std::vector<Entry> folded_;
    BinaryCode minimal_;
    double base_weight_ = 0.0;
    std::vector<double> deltas_;
    std::vector<std::uint16_t> order_;
};

inline QueryContext build_query_context(const BinaryCode& q, const WeightTable& w) {
    return QueryContext(q, w);
}

inline double context_distance(const QueryContext& ctx, const BinaryCode& g) {
    detail::check_same_length(ctx.size(), g.size(), "context_distance");
    return ctx.distance(g.bytes());
}

}  // namespace wham
