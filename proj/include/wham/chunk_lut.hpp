#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "code.hpp"

namespace wham {

/// One 256-entry table of partial ŵ sums per 8-bit chunk of the code.
///
/// distance() adds the chunk entries left to right, which is exactly the
/// accumulation QueryContext::distance performs, so both agree to the bit.
class ChunkLUT {
public:
    ChunkLUT() = default;

    explicit ChunkLUT(const QueryContext& ctx) : bits_(ctx.size()), chunks_(bytes_for(bits_)) {
        table_.resize(chunks_ * 256);
        const auto folded = ctx.folded();
        for (std::size_t c = 0; c < chunks_; ++c) {
            const std::size_t len = std::min<std::size_t>(8, bits_ - 8 * c);
            const std::size_t values = std::size_t{1} << len;
            double* row = table_.data() + c * 256;
            for (std::size_t v = 0; v < values; ++v) {
                double part = 0.0;
                for (std::size_t k = 0; k < len; ++k) part += folded[8 * c + k][(v >> k) & 1u];
                row[v] = part;
            }
            // Unreachable for valid codes (padding is zero); keeps the table total.
            for (std::size_t v = values; v < 256; ++v) row[v] = row[v & (values - 1)];
        }
    }

    std::size_t bits() const noexcept { return bits_; }
    std::size_t chunks() const noexcept { return chunks_; }

    double entry(std::size_t chunk, std::uint8_t byte) const noexcept {
        return table_[chunk * 256 + byte];
    }

    double distance(const std::uint8_t* code) const noexcept {
        const double* row = table_.data();
        double acc = 0.0;
        for (std::size_t c = 0; c < chunks_; ++c, row += 256) acc += row[code[c]];
        return acc;
    }

    double distance(std::span<const std::uint8_t> code) const noexcept {
        return distance(code.data());
    }

    /// Codes of at most 64 bits held in a word (bit j of the word = code bit j).
    double distance(std::uint64_t key) const noexcept {
        const double* row = table_.data();
        double acc = 0.0;
        for (std::size_t c = 0; c < chunks_; ++c, row += 256) acc += row[(key >> (8 * c)) & 0xFFu];
        return acc;
    }

private:
    std::size_t bits_ = 0;
    std::size_t chunks_ = 0;
    std::vector<double> table_;
};

}  // namespace wham
