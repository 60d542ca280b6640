#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "test_util.hpp"

using namespace wham;

namespace {

// q = 0110, w(1) = [0.4, 0.1, 0.3, 0.2], w(0) = 0.
WeightTable example_weights() {
    return WeightTable({{0.0, 0.4}, {0.0, 0.1}, {0.0, 0.3}, {0.0, 0.2}});
}

BinaryCode bc(const char* s) { return BinaryCode::from_string(s); }

}  // namespace

TEST(BinaryCode, PackingIsLittleEndianWithinByte) {
    auto c = bc("1000000001");
    ASSERT_EQ(c.byte_size(), 2u);
    EXPECT_EQ(c.bytes()[0], 0x01);
    EXPECT_EQ(c.bytes()[1], 0x02);
    EXPECT_EQ(c.to_string(), "1000000001");
    EXPECT_EQ(c.word(0, 10), 0x201u);
    EXPECT_EQ(c.word(8, 2), 0x2u);
}

TEST(BinaryCode, LengthLimits) {
    EXPECT_THROW(BinaryCode(0), UnsupportedLengthError);
    EXPECT_THROW(BinaryCode(257), UnsupportedLengthError);
    EXPECT_NO_THROW(BinaryCode(256));
}

TEST(BinaryCode, RejectsNonzeroPadding) {
    const std::uint8_t bytes[] = {0xFF};
    EXPECT_THROW(BinaryCode::from_bytes(bytes, 7), ArgumentError);
    EXPECT_EQ(BinaryCode::from_bytes(std::span<const std::uint8_t>(bytes, 1), 8).to_string(), "11111111");
}

TEST(BinaryCode, EqualityIsBitwise) {
    EXPECT_EQ(bc("0110"), bc("0110"));
    EXPECT_FALSE(bc("0110") == bc("0111"));
    EXPECT_FALSE(bc("0110") == bc("01100"));
}

TEST(WeightTable, RejectsBadValues) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_THROW(WeightTable({{0.0, nan}}), InvalidWeightError);
    EXPECT_THROW(WeightTable({{inf, 0.0}}), InvalidWeightError);
    EXPECT_THROW(WeightTable({{-0.5, 1.0}}), InvalidWeightError);
}

TEST(WeightedDistance, Examples) {
    const WeightTable zero({{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}});
    EXPECT_EQ(weighted_distance(bc("0110"), bc("0110"), zero), 0.0);
    EXPECT_DOUBLE_EQ(weighted_distance(bc("0110"), bc("1001"), example_weights()), 1.0);
    EXPECT_EQ(weighted_distance(bc("0110"), bc("0000"), WeightTable::unit(4)), 2.0);
}

TEST(WeightedDistance, DimensionMismatch) {
    EXPECT_THROW(weighted_distance(bc("0110"), bc("011"), WeightTable::unit(4)), DimensionError);
    EXPECT_THROW(weighted_distance(bc("0110"), bc("0110"), WeightTable::unit(5)), DimensionError);
    EXPECT_THROW(hamming_distance(bc("0110"), bc("011")), DimensionError);
}

TEST(HammingDistance, Examples) {
    EXPECT_EQ(hamming_distance(bc("0110"), bc("0110")), 0);
    EXPECT_EQ(hamming_distance(bc("0110"), bc("1001")), 4);
    EXPECT_EQ(hamming_distance(bc("0110"), bc("0010")), 1);
}

TEST(QueryContext, WorkedExample) {
    const QueryContext ctx = build_query_context(bc("0110"), example_weights());
    EXPECT_EQ(ctx.minimal(), bc("0110"));
    EXPECT_EQ(ctx.base_weight(), 0.0);
    const std::vector<double> deltas(ctx.deltas().begin(), ctx.deltas().end());
    EXPECT_EQ(deltas, (std::vector<double>{0.4, 0.1, 0.3, 0.2}));
    // Ranked bits 2, 4, 3, 1 in one-based numbering.
    const std::vector<std::uint16_t> order(ctx.order().begin(), ctx.order().end());
    EXPECT_EQ(order, (std::vector<std::uint16_t>{1, 3, 2, 0}));
}

TEST(QueryContext, UnitWeightsGiveQueryAsMinimal) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const auto q = test::random_code(rng, 37);
        const QueryContext ctx(q, WeightTable::unit(37));
        EXPECT_EQ(ctx.minimal(), q);
        EXPECT_EQ(ctx.base_weight(), 0.0);
        for (double d : ctx.deltas()) EXPECT_EQ(d, 1.0);
        for (std::size_t j = 0; j < ctx.size(); ++j) EXPECT_EQ(ctx.order()[j], j);
    }
}

TEST(QueryContext, EqualWeightsTieToZero) {
    const WeightTable w(std::vector<WeightTable::Entry>(6, {0.7, 0.7}));
    const QueryContext ctx(bc("101101"), w);
    EXPECT_EQ(ctx.minimal(), bc("000000"));
    for (double d : ctx.deltas()) EXPECT_EQ(d, 0.0);
}

TEST(QueryContext, HandlesZeroSideMoreExpensive) {
    // w(0) > w(1): agreeing with the query costs more than disagreeing.
    const WeightTable w({{1.0, 0.25}, {0.5, 0.5}, {0.0, 2.0}});
    const QueryContext ctx(bc("000"), w);
    EXPECT_EQ(ctx.minimal(), bc("100"));
    EXPECT_EQ(ctx.base_weight(), 0.25 + 0.5 + 0.0);
    EXPECT_EQ(ctx.deltas()[0], 0.75);
    EXPECT_EQ(ctx.deltas()[1], 0.0);
    EXPECT_EQ(ctx.deltas()[2], 2.0);
    EXPECT_EQ(ctx.order()[0], 1);
}

TEST(QueryContext, DimensionAndWeightErrors) {
    EXPECT_THROW(build_query_context(bc("0110"), WeightTable::unit(3)), DimensionError);
    EXPECT_THROW(QueryContext::from_folded({{0.0, std::nan("")}}), InvalidWeightError);
}

TEST(ContextDistance, Examples) {
    const QueryContext ctx(bc("0110"), example_weights());
    EXPECT_EQ(context_distance(ctx, bc("0110")), 0.0);
    EXPECT_DOUBLE_EQ(context_distance(ctx, bc("0010")), 0.1);
    EXPECT_DOUBLE_EQ(context_distance(ctx, bc("1001")), 1.0);
    EXPECT_THROW(context_distance(ctx, bc("01100")), DimensionError);
}

TEST(ContextDistance, MatchesWeightedDistanceBitExactly) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10000; ++t) {
        const std::size_t b = 1 + rng() % kMaxBits;
        const auto q = test::random_code(rng, b);
        const auto g = test::random_code(rng, b);
        const auto w = test::random_weights(rng, b);
        const QueryContext ctx(q, w);
        ASSERT_EQ(context_distance(ctx, g), weighted_distance(q, g, w)) << "b=" << b;
        for (double d : ctx.deltas()) ASSERT_GE(d, 0.0);
        for (std::size_t j = 1; j < b; ++j) {
            ASSERT_LE(ctx.deltas()[ctx.order()[j - 1]], ctx.deltas()[ctx.order()[j]]);
        }
    }
}

TEST(ContextDistance, UnitWeightsEqualHamming) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 10000; ++t) {
        const std::size_t b = 1 + rng() % kMaxBits;
        const auto q = test::random_code(rng, b);
        const auto g = test::random_code(rng, b);
        ASSERT_EQ(weighted_distance(q, g, WeightTable::unit(b)),
                  static_cast<double>(hamming_distance(q, g)));
    }
}

TEST(QueryContext, MinimalCodeIsGlobalMinimum) {
    std::mt19937_64 rng(13);
    for (std::size_t b : {1u, 5u, 9u, 12u, 16u}) {
        for (int t = 0; t < 5; ++t) {
            const auto q = test::random_code(rng, b);
            const auto w = test::random_weights(rng, b);
            const QueryContext ctx(q, w);
            double best = std::numeric_limits<double>::infinity();
            for (std::uint64_t key = 0; key < (std::uint64_t{1} << b); ++key) {
                best = std::min(best, context_distance(ctx, BinaryCode::from_word(key, b)));
            }
            EXPECT_EQ(context_distance(ctx, ctx.minimal()), best);
            EXPECT_EQ(ctx.base_weight(), best);
        }
    }
}

TEST(ChunkLUT, MatchesContextDistance) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 2000; ++t) {
        const std::size_t b = 1 + rng() % kMaxBits;
        const auto q = test::random_code(rng, b);
        const auto g = test::random_code(rng, b);
        const QueryContext ctx(q, test::random_weights(rng, b));
        const ChunkLUT lut(ctx);
        ASSERT_EQ(lut.distance(g.bytes()), context_distance(ctx, g));
        if (b <= 64) {
            ASSERT_EQ(lut.distance(g.word(0, b)), ctx.distance(g.word(0, b)));
        }
    }
}
