#include <gtest/gtest.h>

#include "helpers.hpp"
#include "lift/cost.hpp"
#include "lift/profile.hpp"

using namespace lift;
using namespace lift::test;

namespace {

/// Three statements: move PUT, Mul WrTmp, STOREle.
Program ordering_fixture() {
    Program p;
    p.blocks.emplace(0x1000, block_of("t0:Ity_I64 t1:Ity_I64 t2:Ity_I64",
                                      "   00 | t0 = GET:I64(offset=16)\n"
                                      "   01 | t1 = GET:I64(offset=24)\n"
                                      "   02 | PUT(offset=32) = t0\n"
                                      "   03 | t2 = Mul64(t0,t1)\n"
                                      "   04 | STOREle(t1) = t2\n"));
    return p;
}

}  // namespace

TEST(StatementCost, DefaultWeights) {
    TempTypes temps{{0, Ty::I64}, {1, Ty::I64}, {2, Ty::I64}};
    EXPECT_EQ(statement_cost(IMark{0x1000, 4, 0}), 0u);
    EXPECT_EQ(statement_cost(parse_statement("t2 = Mul64(t0,t1)", temps)), 5u);
    EXPECT_EQ(statement_cost(parse_statement("STOREle(t1) = t0", temps)), 6u);
    EXPECT_EQ(statement_cost(NoOp{}), 0u);
    EXPECT_EQ(statement_cost(parse_statement("t2 = DivU64(LDle:I64(t0),t1)", temps)), 1u + 8u + 5u);
    EXPECT_EQ(statement_cost(parse_statement("PUT(offset=8) = ITE(CmpEQ64(t0,t1),t0,t1)", temps)), 1u + 3u + 2u);
}

TEST(StatementCost, MonotoneInEveryWeight) {
    auto gen = ordering_fixture();
    const auto& b = gen.blocks.begin()->second;
    WeightTable base;
    auto base_costs = statement_costs(b, base);
    for (std::size_t f = 0; f < base.fields().size(); ++f) {
        WeightTable w;
        *w.fields()[f] += 3;
        auto costs = statement_costs(b, w);
        for (std::size_t i = 0; i < costs.size(); ++i) EXPECT_GE(costs[i], base_costs[i]);
    }
}

TEST(Rank, TopTwoOfFixture) {
    auto r = rank_statements(ordering_fixture(), {}, 2);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0], (ScoredStatement{0x1000, 4, 6}));
    EXPECT_EQ(r[1], (ScoredStatement{0x1000, 3, 5}));
}

TEST(Rank, KLargerThanProgramAndTieBreak) {
    auto r = rank_statements(ordering_fixture(), {}, 100);
    ASSERT_EQ(r.size(), 5u);
    // Both GETs cost 2 and the move PUT costs 1; earlier index first on ties.
    EXPECT_EQ(r[2].stmt_index, 0u);
    EXPECT_EQ(r[3].stmt_index, 1u);
    EXPECT_EQ(r[4].stmt_index, 2u);
    EXPECT_THROW(rank_statements(ordering_fixture(), {}, 0), std::invalid_argument);
}

TEST(Rank, MetadataIsNeverRanked) {
    Program p;
    p.blocks.emplace(0x1000, block_of("", "   00 | ------ IMark(0x1000, 4, 0) ------\n   01 | NoOp\n"));
    EXPECT_TRUE(rank_statements(p, {}, 5).empty());
}

TEST(Rank, InvariantUnderUniformScaling) {
    auto p = ordering_fixture();
    const auto base = rank_statements(p, {}, 5);
    for (CostUnits k : {2u, 3u, 10u}) {
        auto scaled = rank_statements(p, WeightTable{}.scaled(k), 5);
        ASSERT_EQ(scaled.size(), base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            EXPECT_EQ(scaled[i].stmt_index, base[i].stmt_index);
            EXPECT_EQ(scaled[i].cost, base[i].cost * k);
        }
    }
}

TEST(Profile, StraightLineMeanEqualsStatic) {
    auto rep = profile_program(ordering_fixture(), 17, 3);
    ASSERT_EQ(rep.blocks.size(), 1u);
    EXPECT_DOUBLE_EQ(rep.blocks[0].mean_cost_units, static_cast<double>(rep.blocks[0].static_total));
    EXPECT_EQ(rep.blocks[0].static_total, 2u + 2u + 1u + 5u + 6u);
}

TEST(Profile, DeterministicCostUnits) {
    auto a = profile_program(ordering_fixture(), 10, 99);
    auto b = profile_program(ordering_fixture(), 10, 99);
    EXPECT_EQ(a.blocks[0].mean_cost_units, b.blocks[0].mean_cost_units);
    EXPECT_EQ(a.ranking, b.ranking);
    EXPECT_THROW(profile_program(ordering_fixture(), 0, 0), std::invalid_argument);
}

TEST(Profile, HalfTakenExitMeanMatchesBruteForce) {
    Program p;
    p.blocks.emplace(0x1000, block_of("t0:Ity_I1",
                                      "   00 | t0 = 64to1(GET:I64(offset=16))\n"
                                      "   01 | if (t0) { PUT(offset=184) = 0x2000; Ijk_Boring }\n"
                                      "   02 | PUT(offset=24) = Mul64(GET:I64(offset=32),0x0000000000000003)\n"));
    const std::size_t runs = 200;
    const std::uint64_t seed = 11;
    // Oracle: the guard is bit 0 of the seeded default byte at guest offset 16.
    std::uint64_t total = 0;
    std::size_t taken = 0;
    for (std::size_t r = 0; r < runs; ++r) {
        const std::uint64_t s = mix64(seed, r);
        const bool guard = (mix64(s, 4096 + 16) & 1) != 0;
        taken += guard;
        total += guard ? 6 : 12;
    }
    auto rep = profile_program(p, runs, seed);
    EXPECT_DOUBLE_EQ(rep.blocks[0].mean_cost_units, static_cast<double>(total) / runs);
    EXPECT_GT(taken, runs / 4);
    EXPECT_LT(taken, 3 * runs / 4);
    EXPECT_GT(rep.blocks[0].mean_cost_units, 6.0);
    EXPECT_LT(rep.blocks[0].mean_cost_units, 12.0);
}

TEST(Profile, OpaqueBlocksUseStaticCost) {
    IrSb b;
    b.addr = 0x3000;
    b.temps = {{0, Ty::I64}};
    b.stmts = {WrTmp{0, mk_opaque("CCall_helper", {c64(1)})}};
    b.next = c64(0);
    Program p;
    p.blocks.emplace(b.addr, b);
    auto rep = profile_program(p, 5, 0);
    EXPECT_TRUE(rep.blocks[0].opaque);
    EXPECT_DOUBLE_EQ(rep.blocks[0].mean_cost_units, 1.0 + 4.0);
}

TEST(Profile, BlocksSortedByMeanCost) {
    Program p = ordering_fixture();
    p.blocks.emplace(0x2000, block_of("", "   00 | PUT(offset=8) = 0x0000000000000001\n", "0x0000000000001000",
                                      0x2000));
    p.blocks.emplace(0x500, block_of("", "", "0x0000000000001000", 0x500));
    auto rep = profile_program(p, 3, 0);
    ASSERT_EQ(rep.blocks.size(), 3u);
    EXPECT_EQ(rep.blocks[0].addr, 0x1000u);
    EXPECT_EQ(rep.blocks[1].addr, 0x2000u);
    EXPECT_EQ(rep.blocks[2].addr, 0x500u);
}
