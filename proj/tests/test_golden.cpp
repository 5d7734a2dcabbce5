#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "mrlsim/golden.hpp"

using namespace mrlsim;

TEST(GateOracle, TruthTables) {
    const bool tt[4][2] = {{false, false}, {false, true}, {true, false}, {true, true}};
    const bool and_[] = {false, false, false, true}, or_[] = {false, true, true, true},
               xor_[] = {false, true, true, false};
    for (int i = 0; i < 4; ++i) {
        const bool a = tt[i][0], b = tt[i][1];
        EXPECT_EQ(eval_gate(GateKind::And, {a, b}), and_[i]);
        EXPECT_EQ(eval_gate(GateKind::Or, {a, b}), or_[i]);
        EXPECT_EQ(eval_gate(GateKind::Nand, {a, b}), !and_[i]);
        EXPECT_EQ(eval_gate(GateKind::Nor, {a, b}), !or_[i]);
        EXPECT_EQ(eval_gate(GateKind::Xor, {a, b}), xor_[i]);
    }
    EXPECT_TRUE(eval_gate(GateKind::Not, {false}));
    EXPECT_FALSE(eval_gate(GateKind::Not, {true}));
}

TEST(GateOracle, ArityChecked) {
    EXPECT_THROW((void)eval_gate(GateKind::And, {true}), std::invalid_argument);
    EXPECT_THROW((void)eval_gate(GateKind::Not, {true, false}), std::invalid_argument);
}

TEST(SequentialOracle, DffAndLatch) {
    EXPECT_TRUE(step_dff(true, ClockEdge::Rising, false));
    EXPECT_FALSE(step_dff(true, ClockEdge::None, false));
    EXPECT_TRUE(step_dlatch(true, true, false));
    EXPECT_TRUE(step_dlatch(false, false, true));
}

TEST(XaxOracle, RegistersLoadInputs) {
    const auto st = step_xax({true, true, false}, {});
    EXPECT_EQ(st.next, (XaxState{true, true, false}));
    EXPECT_FALSE(st.x_out);
}

TEST(XaxOracle, AccumulatesXorOfChangeWhenEnabled) {
    for (int xr = 0; xr < 2; ++xr)
        for (int x = 0; x < 2; ++x) {
            const auto st = step_xax({x != 0, true, false}, {xr != 0, true, false});
            EXPECT_EQ(st.next.acc, x != xr);
        }
}

TEST(XaxOracle, EqualBitsPassSerialInput) {
    for (int v = 0; v < 2; ++v)
        for (int s = 0; s < 2; ++s)
            for (int ar = 0; ar < 2; ++ar) {
                const auto st = step_xax({v != 0, false, s != 0}, {v != 0, ar != 0, true});
                EXPECT_EQ(st.next.acc, s != 0);
            }
}

TEST(XaxOracle, OutputsReflectRegistersBeforeEdge) {
    const XaxState s{true, false, true};
    const auto st = step_xax({false, true, true}, s);
    EXPECT_TRUE(st.x_out);
    EXPECT_TRUE(st.acc_out);
}

TEST(XaxOracle, CombinationalAccumulatorWiring) {
    XaxWiring w;
    w.acc_stage = false;
    w.a_stage = false;
    auto [x_out, acc] = xax_outputs({true, true, false}, {false, false, false}, w);
    EXPECT_FALSE(x_out);
    EXPECT_TRUE(acc);
    EXPECT_THROW((void)step_xax({}, {}, XaxWiring{false, true, true}), std::invalid_argument);
}

TEST(Stimulus, GateExhaustiveCoversAllVectors) {
    const auto xor_st = gate_exhaustive(GateKind::Xor);
    EXPECT_EQ(std::count_if(xor_st.begin(), xor_st.end(), [](const Cycle& c) { return c.counted; }), 4);
    const auto not_st = gate_exhaustive(GateKind::Not);
    EXPECT_EQ(std::count_if(not_st.begin(), not_st.end(), [](const Cycle& c) { return c.counted; }), 2);
}

TEST(Stimulus, XaxExhaustiveCountsSixtyFourCases) {
    std::size_t counted = 0;
    for (const auto& st : xax_exhaustive())
        for (const auto& c : st) counted += c.counted;
    EXPECT_EQ(counted, 64u);
}

TEST(Stimulus, XaxExhaustiveReachesEveryStateInputPair) {
    std::set<std::pair<int, int>> seen;
    for (const auto& st : xax_exhaustive()) {
        XaxState s{};
        for (const auto& c : st) {
            const XaxInputs in{c.inputs[0], c.inputs[1], c.inputs[2]};
            if (c.counted) seen.insert({s.xr * 4 + s.ar * 2 + s.acc, in.x * 4 + in.a * 2 + in.s});
            s = step_xax(in, s).next;
        }
    }
    EXPECT_EQ(seen.size(), 64u);
}

TEST(Stimulus, RandomIsSeedDeterministic) {
    auto a = random_stimulus("xax", 7, 3, 8);
    auto b = random_stimulus("xax", 7, 3, 8);
    auto c = random_stimulus("xax", 8, 3, 8);
    auto flat = [](const std::vector<Stimulus>& v) {
        std::vector<bool> bits;
        for (const auto& st : v)
            for (const auto& cy : st) bits.insert(bits.end(), cy.inputs.begin(), cy.inputs.end());
        return bits;
    };
    EXPECT_EQ(flat(a), flat(b));
    EXPECT_NE(flat(a), flat(c));
    EXPECT_EQ(a.size(), 3u);
}

TEST(Testbench, DrivesInputsClockAndSupply) {
    const auto h = dff_harness();
    const auto tb = testbench(h, dff_exhaustive().front(), HarnessOptions{});
    const auto f = expand(tb);
    EXPECT_TRUE(f.device_index("Vvdd").has_value());
    EXPECT_TRUE(f.device_index("Vd").has_value());
    EXPECT_TRUE(f.device_index("Vclk").has_value());
    EXPECT_FALSE(has_errors(validate(f)));
}

TEST(Equivalence, CombinationalGatesPassExhaustively) {
    for (auto k : {GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor, GateKind::Not, GateKind::Xor}) {
        const auto r = equivalence_check(gate_name(k), VerifyMode::Exhaustive);
        EXPECT_TRUE(r.pass) << gate_name(k);
        EXPECT_EQ(r.vectors, gate_inputs(k) == 1 ? 2u : 4u);
    }
}

TEST(Equivalence, ReportFormat) {
    EquivalenceReport r;
    r.block = "dff";
    r.pass = false;
    r.vectors = 8;
    r.runs = 8;
    r.compared = 16;
    r.first_divergence = Divergence{2, 3, 4.5e-9, "q", true, Level::X};
    std::ostringstream os;
    write_report(os, r);
    EXPECT_EQ(os.str(),
              "verify dff (exhaustive): FAIL, 8 cases\n"
              "runs: 8, samples compared: 16, vdd 1 V, clock 1e-09 s\n"
              "first divergence: run 2, cycle 3, t = 4.5e-09 s, signal q, expected 1, observed x (unsettled)\n");
}
