#pragma once

// Behavioral reference models and the analog-versus-oracle equivalence
// harness.
//
// The harness wraps a generated block in a testbench (supply, rail-valued
// PWL inputs, clock), runs the transient engine, digitizes the outputs at
// each sample instant and compares level-for-level with the oracle.
//
// Stimulus timing, per cycle k of period T starting at t_k = k*T:
//   - inputs switch during [t_k, t_k + edge_time]
//   - clocked blocks: clk is low in the first half-cycle and rises at
//     t_k + T/2; a no-edge cycle keeps clk high throughout
//   - outputs are sampled `settle` after the active edge: at t_k + T/2 +
//     settle*T for clocked blocks, t_k + settle*T otherwise, just before the
//     next clock edge with the default settle of 0.4

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <future>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mrlsim/engine.hpp"
#include "mrlsim/gates.hpp"
#include "mrlsim/measure.hpp"
#include "mrlsim/netlist.hpp"

namespace mrlsim {

// ---------------------------------------------------------------------------
// Oracle

[[nodiscard]] inline bool eval_gate(GateKind kind, std::span<const bool> in) {
    if (in.size() != gate_inputs(kind))
        throw std::invalid_argument(std::string(gate_name(kind)) + ": expected " + std::to_string(gate_inputs(kind)) +
                                    " inputs, got " + std::to_string(in.size()));
    switch (kind) {
        case GateKind::And: return in[0] && in[1];
        case GateKind::Or: return in[0] || in[1];
        case GateKind::Nand: return !(in[0] && in[1]);
        case GateKind::Nor: return !(in[0] || in[1]);
        case GateKind::Not: return !in[0];
        case GateKind::Xor: return in[0] != in[1];
    }
    return false;
}

[[nodiscard]] inline bool eval_gate(GateKind kind, std::initializer_list<bool> in) {
    return eval_gate(kind, std::span<const bool>(in.begin(), in.size()));
}

enum class ClockEdge { Rising, None };

[[nodiscard]] inline bool step_dff(bool d, ClockEdge edge, bool q) { return edge == ClockEdge::Rising ? d : q; }

[[nodiscard]] inline bool step_dlatch(bool d, bool en, bool q) { return en ? d : q; }

struct XaxState {
    bool xr = false;
    bool ar = false;
    bool acc = false;
    bool operator==(const XaxState&) const = default;
};

struct XaxInputs {
    bool x = false;
    bool a = false;
    bool s = false;
};

struct XaxStep {
    bool x_out = false;
    bool acc_out = false;
    XaxState next;
};

/// Outputs visible for the given inputs and register contents.
[[nodiscard]] inline std::pair<bool, bool> xax_outputs(XaxInputs in, XaxState s, const XaxWiring& w = {}) {
    const bool ar = w.a_stage ? s.ar : in.a;
    const bool comb = ((in.x != s.xr) && ar) != in.s;
    return {s.xr, w.acc_stage ? s.acc : comb};
}

/// One clock cycle: outputs before the edge, then the register update.
[[nodiscard]] inline XaxStep step_xax(XaxInputs in, XaxState s, const XaxWiring& w = {}) {
    if (!w.valid()) throw std::invalid_argument("invalid XAX wiring");
    const bool ar = w.a_stage ? s.ar : in.a;
    const bool comb = ((in.x != s.xr) && ar) != in.s;
    auto [x_out, acc_out] = xax_outputs(in, s, w);
    XaxState next{in.x, w.a_stage ? in.a : s.ar, w.acc_stage ? comb : s.acc};
    return {x_out, acc_out, next};
}

// ---------------------------------------------------------------------------
// Stimulus and harness

struct Cycle {
    std::vector<bool> inputs;
    bool edge = true;                              // clocked blocks only
    std::vector<std::optional<bool>> expected;     // per output; nullopt = not compared
    bool counted = false;                          // counts toward the reported vector total
};

using Stimulus = std::vector<Cycle>;

struct HarnessOptions {
    double vdd = 1.0;
    double clock_period = 1e-9;
    double tstep = 1e-12;
    double settle = 0.4;         // fraction of the clock period
    double edge_time = 10e-12;   // input and clock transition time
    int state_substeps = 4;
    int max_switch_iters = 50;
    Technology tech;
    unsigned threads = 0;        // 0 = hardware concurrency
};

/// A block with its port roles.
struct Harness {
    Block block;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    bool clocked = false;
};

struct Divergence {
    std::size_t run = 0;
    std::size_t cycle = 0;
    double time = 0;
    std::string signal;
    bool expected = false;
    Level observed = Level::X;
    [[nodiscard]] bool unsettled() const { return observed == Level::X; }
};

struct RunResult {
    std::size_t compared = 0;
    std::optional<Divergence> divergence;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<PwlPoint> level_pwl(const std::vector<double>& levels, double period, double edge) {
    std::vector<PwlPoint> p{{0.0, levels.front()}};
    for (std::size_t k = 1; k < levels.size(); ++k) {
        if (levels[k] == levels[k - 1]) continue;
        const double t = static_cast<double>(k) * period;
        if (t > p.back().t) p.push_back({t, levels[k - 1]});
        p.push_back({t + edge, levels[k]});
    }
    return p;
}

inline std::vector<PwlPoint> clock_pwl(const Stimulus& st, double period, double edge, double vdd) {
    std::vector<PwlPoint> p;
    bool high = !st.front().edge;
    p.push_back({0.0, high ? vdd : 0.0});
    for (std::size_t k = 0; k < st.size(); ++k) {
        if (!st[k].edge) continue;
        const double t = static_cast<double>(k) * period;
        if (high) {
            if (t > p.back().t) p.push_back({t, vdd});
            p.push_back({t + edge, 0.0});
        }
        p.push_back({t + 0.5 * period, 0.0});
        p.push_back({t + 0.5 * period + edge, vdd});
        high = true;
    }
    return p;
}

inline double sample_time(const Harness& h, const HarnessOptions& o, std::size_t k) {
    const double start = static_cast<double>(k) * o.clock_period;
    return h.clocked ? start + 0.5 * o.clock_period + o.settle * o.clock_period : start + o.settle * o.clock_period;
}

}  // namespace detail

/// Testbench netlist: the block instance `X1` with every port on a net of
/// the same name, plus sources `Vvdd`, `V<input>` and `Vclk`.
[[nodiscard]] inline Circuit testbench(const Harness& h, const Stimulus& st, const HarnessOptions& o) {
    if (st.empty()) throw std::invalid_argument("empty stimulus");
    Block b = mrlsim::bind(h.block, "X1", h.block.ports);
    Circuit c = std::move(b.netlist);
    c.title = "* testbench for " + h.block.subckt;
    auto& dev = c.top.devices;
    const auto& ports = h.block.ports;
    if (std::find(ports.begin(), ports.end(), "vdd") != ports.end())
        dev.push_back(make_vsource("Vvdd", "vdd", "0", SourceWave::constant(o.vdd)));
    for (std::size_t i = 0; i < h.inputs.size(); ++i) {
        std::vector<double> levels;
        for (const auto& cy : st) levels.push_back(cy.inputs.at(i) ? o.vdd : 0.0);
        dev.push_back(make_vsource("V" + h.inputs[i], h.inputs[i], "0",
                                   SourceWave::pwl(detail::level_pwl(levels, o.clock_period, o.edge_time))));
    }
    if (h.clocked)
        dev.push_back(make_vsource("Vclk", "clk", "0", SourceWave::pwl(detail::clock_pwl(st, o.clock_period, o.edge_time, o.vdd))));
    c.analyses = {{o.tstep, static_cast<double>(st.size()) * o.clock_period}};
    return c;
}

/// Simulates one stimulus run and compares every expected output.
[[nodiscard]] inline RunResult run_stimulus(const Harness& h, const Stimulus& st, const HarnessOptions& o,
                                            std::size_t run_index = 0) {
    const Circuit tb = testbench(h, st, o);
    const FlatCircuit flat = expand(tb);
    SimOptions so;
    so.tstep = o.tstep;
    so.tstop = tb.analyses.front().tstop;
    so.state_substeps = o.state_substeps;
    so.max_switch_iters = o.max_switch_iters;
    const Waveform w = run_transient(flat, so);
    const DigitalTrace tr = digitize(w, h.outputs, o.vdd);

    RunResult r;
    r.warnings = w.warnings;
    for (std::size_t k = 0; k < st.size(); ++k) {
        const double ts = detail::sample_time(h, o, k);
        for (std::size_t j = 0; j < h.outputs.size(); ++j) {
            const auto& want = st[k].expected.at(j);
            if (!want) continue;
            ++r.compared;
            const Level got = tr.level_at(h.outputs[j], ts);
            const Level exp = *want ? Level::High : Level::Low;
            if (got != exp && !r.divergence) r.divergence = Divergence{run_index, k, ts, h.outputs[j], *want, got};
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Harnesses and stimulus builders for the generated blocks

[[nodiscard]] inline Harness gate_harness(GateKind k, const Technology& tech = {}) {
    Harness h{build_gate(k, tech), {}, {"out"}, false};
    if (k == GateKind::Not) h.inputs = {"in"};
    else h.inputs = {"a", "b"};
    return h;
}

[[nodiscard]] inline Harness dlatch_harness(const Technology& tech = {}) { return {build_dlatch(tech), {"d", "en"}, {"q"}, false}; }

[[nodiscard]] inline Harness dff_harness(const Technology& tech = {}) { return {build_dff(tech), {"d"}, {"q"}, true}; }

[[nodiscard]] inline Harness xax_harness(const XaxWiring& w = {}, const Technology& tech = {}) {
    return {build_xax(w, tech), {"x_in", "a_in", "s_in"}, {"x_out", "acc_out"}, true};
}

enum class VerifyMode { Exhaustive, Random };

[[nodiscard]] inline std::string_view mode_name(VerifyMode m) { return m == VerifyMode::Exhaustive ? "exhaustive" : "random"; }

namespace detail {

inline std::vector<bool> bits_of(std::size_t v, std::size_t n) {
    std::vector<bool> b;
    for (std::size_t i = 0; i < n; ++i) b.push_back(((v >> (n - 1 - i)) & 1u) != 0);
    return b;
}

inline bool eval_bits(GateKind k, const std::vector<bool>& in) {
    std::array<bool, 2> a{};
    if (in.size() > a.size()) throw std::invalid_argument("too many gate inputs");
    std::copy(in.begin(), in.end(), a.begin());
    return eval_gate(k, std::span<const bool>(a.data(), in.size()));
}

inline Cycle gate_cycle(GateKind k, std::vector<bool> in, bool counted) {
    Cycle c;
    c.edge = false;
    c.expected = {eval_bits(k, in)};
    c.inputs = std::move(in);
    c.counted = counted;
    return c;
}

// Latch cases go through an explicit "close" cycle so that d never changes
// in the same instant en falls.
inline void latch_case(Stimulus& st, bool q0, bool d, bool en) {
    st.push_back({{q0, true}, false, {q0}, false});
    st.push_back({{q0, false}, false, {q0}, false});
    st.push_back({{d, en}, false, {step_dlatch(d, en, q0)}, true});
}

inline Cycle xax_cycle(XaxInputs in, XaxState& s, const XaxWiring& w, bool compare, bool counted) {
    const XaxStep r = step_xax(in, s, w);
    s = r.next;
    Cycle c{{in.x, in.a, in.s}, true, {}, counted};
    if (compare) {
        auto [x_out, acc_out] = xax_outputs(in, s, w);
        c.expected = {x_out, acc_out};
    } else {
        c.expected = {std::nullopt, std::nullopt};
    }
    return c;
}

// Two all-zero cycles leave every register at 0 regardless of power-up state.
inline Stimulus xax_reset(XaxState& s, const XaxWiring& w) {
    s = {};
    Stimulus st;
    st.push_back(xax_cycle({}, s, w, false, false));
    st.push_back(xax_cycle({}, s, w, true, false));
    return st;
}

// Inputs for one cycle that load the registers with `target`.
inline XaxInputs xax_loader(XaxState from, XaxState target, const XaxWiring& w) {
    XaxInputs in{target.xr, target.ar, false};
    if (w.acc_stage) {
        const bool ar = w.a_stage ? from.ar : in.a;
        in.s = target.acc != ((in.x != from.xr) && ar);
    }
    return in;
}

}  // namespace detail

/// Every input combination once, in binary counting order (input 0 is the MSB).
[[nodiscard]] inline Stimulus gate_exhaustive(GateKind k) {
    Stimulus st;
    const std::size_t n = gate_inputs(k);
    for (std::size_t v = 0; v < (std::size_t{1} << n); ++v) st.push_back(detail::gate_cycle(k, detail::bits_of(v, n), true));
    return st;
}

/// All (stored q, d, en) combinations, one run.
[[nodiscard]] inline Stimulus dlatch_exhaustive() {
    Stimulus st;
    for (std::size_t v = 0; v < 8; ++v) {
        auto b = detail::bits_of(v, 3);
        detail::latch_case(st, b[0], b[1], b[2]);
    }
    return st;
}

/// One run per (stored q, d, edge) case: a load cycle followed by the test cycle.
[[nodiscard]] inline std::vector<Stimulus> dff_exhaustive() {
    std::vector<Stimulus> runs;
    for (std::size_t v = 0; v < 8; ++v) {
        auto b = detail::bits_of(v, 3);
        const bool q0 = b[0], d = b[1], edge = b[2];
        const bool q1 = step_dff(d, edge ? ClockEdge::Rising : ClockEdge::None, q0);
        runs.push_back({{{q0}, true, {q0}, false}, {{d}, edge, {q1}, true}});
    }
    return runs;
}

/// One run per input vector; within a run every register state is loaded
/// in turn and the vector applied from it. Registers not present in the
/// wiring collapse the state space accordingly.
[[nodiscard]] inline std::vector<Stimulus> xax_exhaustive(const XaxWiring& w = {}) {
    if (!w.valid()) throw std::invalid_argument("invalid XAX wiring");
    std::vector<Stimulus> runs;
    for (std::size_t iv = 0; iv < 8; ++iv) {
        const auto ib = detail::bits_of(iv, 3);
        const XaxInputs in{ib[0], ib[1], ib[2]};
        XaxState s;
        Stimulus st = detail::xax_reset(s, w);
        for (std::size_t sv = 0; sv < 8; ++sv) {
            const auto sb = detail::bits_of(sv, 3);
            const XaxState target{sb[0], sb[1] && w.a_stage, sb[2] && w.acc_stage};
            if ((sb[1] && !w.a_stage) || (sb[2] && !w.acc_stage)) continue;
            st.push_back(detail::xax_cycle(detail::xax_loader(s, target, w), s, w, true, false));
            st.push_back(detail::xax_cycle(in, s, w, true, true));
        }
        runs.push_back(std::move(st));
    }
    return runs;
}

/// Seeded random sequences. Each cycle draws one 64-bit word from
/// mt19937_64 and takes its inputs (and, for the DFF, the edge flag) from
/// the low bits.
[[nodiscard]] inline std::vector<Stimulus> random_stimulus(std::string_view block, std::uint64_t seed, std::size_t sequences,
                                                           std::size_t cycles, const XaxWiring& w = {}) {
    std::mt19937_64 rng(seed);
    auto bit = [](std::uint64_t word, unsigned i) { return ((word >> i) & 1u) != 0; };
    std::vector<Stimulus> runs;
    for (std::size_t n = 0; n < sequences; ++n) {
        Stimulus st;
        if (auto g = gate_from_name(block)) {
            for (std::size_t k = 0; k < cycles; ++k) {
                const auto word = rng();
                std::vector<bool> in{bit(word, 0)};
                if (gate_inputs(*g) == 2) in.push_back(bit(word, 1));
                st.push_back(detail::gate_cycle(*g, std::move(in), true));
            }
        } else if (block == "dlatch") {
            bool q = false, d = false, en = true;
            st.push_back({{false, true}, false, {false}, false});
            for (std::size_t k = 0; k < cycles; ++k) {
                const auto word = rng();
                const bool en_next = bit(word, 1);
                const bool d_next = (en && !en_next) ? d : bit(word, 0);
                d = d_next;
                en = en_next;
                q = step_dlatch(d, en, q);
                st.push_back({{d, en}, false, {q}, true});
            }
        } else if (block == "dff") {
            bool q = false;
            st.push_back({{false}, true, {false}, false});
            for (std::size_t k = 0; k < cycles; ++k) {
                const auto word = rng();
                const bool d = bit(word, 0);
                const bool edge = bit(word, 1);
                q = step_dff(d, edge ? ClockEdge::Rising : ClockEdge::None, q);
                st.push_back({{d}, edge, {q}, true});
            }
        } else if (block == "xax") {
            XaxState s;
            st = detail::xax_reset(s, w);
            for (std::size_t k = 0; k < cycles; ++k) {
                const auto word = rng();
                st.push_back(detail::xax_cycle({bit(word, 0), bit(word, 1), bit(word, 2)}, s, w, true, true));
            }
        } else {
            throw std::invalid_argument("unknown block '" + std::string(block) + "'");
        }
        runs.push_back(std::move(st));
    }
    return runs;
}

// ---------------------------------------------------------------------------
// Equivalence check

struct EquivalenceReport {
    std::string block;
    VerifyMode mode = VerifyMode::Exhaustive;
    std::optional<std::uint64_t> seed;
    bool pass = false;
    std::size_t vectors = 0;    // counted test vectors (or cases)
    std::size_t compared = 0;   // every output sample compared, preambles included
    std::size_t runs = 0;
    double vdd = 1.0;
    double clock_period = 1e-9;
    std::optional<Divergence> first_divergence;
    std::vector<std::string> warnings;
};

[[nodiscard]] inline Harness harness_for(std::string_view block, const Technology& tech = {}, const XaxWiring& w = {}) {
    if (auto g = gate_from_name(block)) return gate_harness(*g, tech);
    if (block == "dlatch") return dlatch_harness(tech);
    if (block == "dff") return dff_harness(tech);
    if (block == "xax") return xax_harness(w, tech);
    throw std::invalid_argument("unknown block '" + std::string(block) + "'");
}

/// Runs every stimulus (concurrently when threads allow) and merges the
/// results in run order, so the report does not depend on scheduling.
[[nodiscard]] inline EquivalenceReport check_runs(const Harness& h, const std::vector<Stimulus>& runs, const HarnessOptions& o) {
    std::vector<RunResult> results(runs.size());
    unsigned threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, runs.size()));
    if (threads <= 1) {
        for (std::size_t i = 0; i < runs.size(); ++i) results[i] = run_stimulus(h, runs[i], o, i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> workers;
        for (unsigned t = 0; t < threads; ++t)
            workers.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i; (i = next.fetch_add(1)) < runs.size();) results[i] = run_stimulus(h, runs[i], o, i);
            }));
        for (auto& f : workers) f.get();
    }

    EquivalenceReport rep;
    rep.block = h.block.subckt;
    rep.runs = runs.size();
    rep.vdd = o.vdd;
    rep.clock_period = o.clock_period;
    for (const auto& st : runs)
        for (const auto& c : st) rep.vectors += c.counted ? 1 : 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        rep.compared += results[i].compared;
        if (!rep.first_divergence && results[i].divergence) rep.first_divergence = results[i].divergence;
        for (const auto& wmsg : results[i].warnings) rep.warnings.push_back("run " + std::to_string(i) + ": " + wmsg);
    }
    rep.pass = !rep.first_divergence;
    return rep;
}

struct VerifyOptions {
    HarnessOptions harness;
    XaxWiring wiring;
    std::uint64_t seed = 1;
    std::size_t sequences = 100;
    std::size_t cycles = 8;
};

/// Analog-versus-oracle check of a generated block by CLI name.
[[nodiscard]] inline EquivalenceReport equivalence_check(std::string_view block, VerifyMode mode, const VerifyOptions& opt = {}) {
    const Harness h = harness_for(block, opt.harness.tech, opt.wiring);
    std::vector<Stimulus> runs;
    if (mode == VerifyMode::Random) {
        runs = random_stimulus(block, opt.seed, opt.sequences, opt.cycles, opt.wiring);
    } else if (auto g = gate_from_name(block)) {
        runs = {gate_exhaustive(*g)};
    } else if (block == "dlatch") {
        runs = {dlatch_exhaustive()};
    } else if (block == "dff") {
        runs = dff_exhaustive();
    } else {
        runs = xax_exhaustive(opt.wiring);
    }
    EquivalenceReport rep = check_runs(h, runs, opt.harness);
    rep.block = std::string(block);
    rep.mode = mode;
    if (mode == VerifyMode::Random) rep.seed = opt.seed;
    return rep;
}

/// Plain-text report: a verdict line followed by detail lines.
inline void write_report(std::ostream& os, const EquivalenceReport& r) {
    os << "verify " << r.block << " (" << mode_name(r.mode) << "): " << (r.pass ? "PASS" : "FAIL") << ", " << r.vectors
       << (r.mode == VerifyMode::Exhaustive && (r.block == "dff" || r.block == "xax") ? " cases" : " vectors") << '\n';
    os << "runs: " << r.runs << ", samples compared: " << r.compared << ", vdd " << detail::format_number(r.vdd)
       << " V, clock " << detail::format_number(r.clock_period) << " s\n";
    if (r.seed) os << "seed: " << *r.seed << '\n';
    if (const auto& d = r.first_divergence) {
        os << "first divergence: run " << d->run << ", cycle " << d->cycle << ", t = " << detail::format_number(d->time) << " s, signal "
           << d->signal << ", expected " << (d->expected ? '1' : '0') << ", observed " << level_char(d->observed)
           << (d->unsettled() ? " (unsettled)" : "") << '\n';
    }
    for (const auto& w : r.warnings) os << "warning: " << w << '\n';
}

}  // namespace mrlsim
