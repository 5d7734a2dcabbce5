// Acceptance run: one PASS/FAIL line per criterion, detail lines indented
// below it. Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fixtures.hpp"

using namespace mrlsim;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
    void info(const std::string& what) { details.push_back("info " + what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Device counts of the generated blocks.
Outcome device_census() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto x = build_gate(GateKind::Xor).census;
    const auto l = build_dlatch().census;
    const auto d = build_dff().census;
    const auto a = build_xax().census;
    const double dt = seconds_since(t0);
    o.check(x.memristors == 6 && x.transistors == 2, fmt("xor %zu memristors + %zu transistors", x.memristors, x.transistors));
    o.check(l.memristors == 8 && l.transistors == 6, fmt("dlatch %zu + %zu", l.memristors, l.transistors));
    o.check(d.memristors == 16 && d.transistors == 14, fmt("dff %zu + %zu", d.memristors, d.transistors));
    o.check(a.memristors == 62 && a.inverter_cells == 23,
            fmt("xax %zu memristors, %zu inverter cells", a.memristors, a.inverter_cells));
    o.check(dt < 1.0, fmt("runtime %.3f s", dt));
    return o;
}

// 2. Area saving against the 27-cell CMOS baseline.
Outcome area_saving() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = area_report(build_xax().census, 27);
    const double dt = seconds_since(t0);
    o.check(r.cells == 23 && r.saving == (27.0 - 23.0) / 27.0, fmt("saving %.1f %% (%zu of %zu cells)", r.saving * 100,
                                                                   r.baseline_cells - r.cells, r.baseline_cells));
    o.check(fmt("%.1f", r.saving * 100) == "14.8", "rounds to 14.8 %");
    o.check(dt < 1.0, fmt("runtime %.3f s", dt));
    return o;
}

double settled_output(GateKind k, bool a, bool b, double x0) {
    const auto w = fixtures::simulate(fixtures::divider_gate(k, a, b, x0), 1e-12, 0.4e-9);
    return w.voltage("out").back();
}

// 3. Divider levels of the memristive AND and OR.
Outcome divider_levels() {
    Outcome o;
    const double lo = 1.0 / 1001.0, hi = 1000.0 / 1001.0;
    // Both devices start in the formed low-resistance state; the divider then
    // programs the device facing the opposite rail to r_off.
    const double and10 = settled_output(GateKind::And, true, false, 1.0);
    const double or10 = settled_output(GateKind::Or, true, false, 1.0);
    o.check(std::abs(and10 - lo) < 1e-4, fmt("AND(1,0) = %.7f V, target 1/1001 = %.7f V", and10, lo));
    o.check(std::abs(or10 - hi) < 1e-4, fmt("OR(1,0) = %.7f V, target 1000/1001 = %.7f V", or10, hi));
    o.info(fmt("AND(0,0) = %.3g V (both inputs at ground)", settled_output(GateKind::And, false, false, 1.0)));
    o.info(fmt("AND(1,0) from x0 = 0.5: %.3g V", settled_output(GateKind::And, true, false, 0.5)));
    return o;
}

// 4. Exhaustive truth tables for every gate.
Outcome gate_equivalence() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    for (auto k : {GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor, GateKind::Not, GateKind::Xor}) {
        const auto r = equivalence_check(gate_name(k), VerifyMode::Exhaustive);
        const std::size_t want = std::size_t{1} << gate_inputs(k);
        o.check(r.pass && r.vectors == want,
                fmt("%s: %s, %zu vectors", std::string(gate_name(k)).c_str(), r.pass ? "PASS" : "FAIL", r.vectors));
    }
    const double dt = seconds_since(t0);
    o.check(dt < 60.0, fmt("runtime %.2f s", dt));
    return o;
}

std::string divergence_text(const EquivalenceReport& r) {
    if (!r.first_divergence) return "";
    const auto& d = *r.first_divergence;
    return fmt(" (run %zu, cycle %zu, %s expected %d observed %c)", d.run, d.cycle, d.signal.c_str(), d.expected ? 1 : 0,
               level_char(d.observed));
}

// 5. Sequential blocks against their oracles.
Outcome sequential_equivalence() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto dff = equivalence_check("dff", VerifyMode::Exhaustive);
    o.check(dff.pass && dff.vectors == 8, fmt("dff exhaustive: %zu cases%s", dff.vectors, divergence_text(dff).c_str()));
    const auto xe = equivalence_check("xax", VerifyMode::Exhaustive);
    o.check(xe.pass && xe.vectors == 64, fmt("xax exhaustive: %zu cases%s", xe.vectors, divergence_text(xe).c_str()));
    VerifyOptions vo;
    vo.seed = 1;
    vo.sequences = 100;
    vo.cycles = 8;
    const auto xr = equivalence_check("xax", VerifyMode::Random, vo);
    o.check(xr.pass && xr.runs == 100,
            fmt("xax random: %zu sequences x 8 cycles, seed 1%s", xr.runs, divergence_text(xr).c_str()));
    o.info(fmt("runtime %.1f s", seconds_since(t0)));
    return o;
}

// 6. Pinched hysteresis of a single device under a sinusoid.
Outcome pinched_hysteresis() {
    Outcome o;
    const double f = 1e9, dt = 1e-12;
    const auto w = fixtures::simulate(fixtures::memristor_drive(fixtures::sine_pwl(1.0, f, 2, dt), 0.0), dt, 2.0 / f);
    const auto v = w.source_voltage("Vs");
    const auto i = w.current("Vs");

    // Current at every zero crossing of the applied voltage, interpolated
    // between the bracketing samples.
    double worst = 0;
    std::size_t crossings = 0;
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] == 0.0) {
            worst = std::max(worst, std::abs(i[k]));
            ++crossings;
        } else if (v[k - 1] != 0.0 && (v[k - 1] < 0) != (v[k] < 0)) {
            const double a = v[k - 1] / (v[k - 1] - v[k]);
            worst = std::max(worst, std::abs(i[k - 1] + a * (i[k] - i[k - 1])));
            ++crossings;
        }
    }
    o.check(crossings >= 3 && worst < 1e-9, fmt("|I| <= %.3g A at %zu zero crossings", worst, crossings));

    // Signed area of each half-cycle lobe over the first period (shoelace).
    const std::size_t half = static_cast<std::size_t>(std::llround(0.5 / (f * dt)));
    double lobe_pos = 0, lobe_neg = 0, i_max = 0;
    for (std::size_t k = 1; k <= 2 * half; ++k) {
        const double cross = v[k - 1] * i[k] - v[k] * i[k - 1];
        (k <= half ? lobe_pos : lobe_neg) += 0.5 * cross;
        i_max = std::max(i_max, std::abs(i[k]));
    }
    const double scale = 1.0 * i_max;
    o.check(std::abs(lobe_pos) > 1e-3 * scale && std::abs(lobe_neg) > 1e-3 * scale,
            fmt("lobe areas %.3g and %.3g V*A (peak |I| x 1 V = %.3g V*A)", std::abs(lobe_pos), std::abs(lobe_neg), scale));
    const auto x = w.state("Y1");
    o.info(fmt("state swing %.3f .. %.3f", *std::min_element(x.begin(), x.end()), *std::max_element(x.begin(), x.end())));
    return o;
}

// 7. Measurement calibration on closed-form fixtures.
Outcome measurement_calibration() {
    Outcome o;
    const double r = 1e3, c = 1e-12;
    const auto w = fixtures::simulate(fixtures::rc_step(r, c), 1e-12, 3e-9);
    const auto d = propagation_delay(w, "in", "out", 1.0);
    const double target = std::numbers::ln2 * r * c;
    const bool have = d.size() == 1;
    const double err = have ? std::abs(d[0].delay - target) / target : 1.0;
    o.check(have && err < 0.02, fmt("RC 50 %% delay %.2f ps vs ln2*RC = %.2f ps (%.2f %%)", have ? d[0].delay * 1e12 : 0.0,
                                    target * 1e12, err * 100));

    const double v = 1.5, rl = 2e3, t = 1e-9;
    const auto wd = fixtures::simulate(fixtures::resistive_load(v, rl), 1e-12, t);
    const double e = supply_energy(wd, "Vdd", {0.0, t}).energy;
    const double e_ref = v * v * t / rl;
    o.check(std::abs(e - e_ref) / e_ref < 0.005, fmt("DC energy %.6g J vs V^2 T / R = %.6g J", e, e_ref));

    const auto p = dynamic_power(0.1, 1e-11, 1e9, 1.0);
    o.check(p.p_dyn == 0.001, fmt("alpha C f V^2 = %.17g W", p.p_dyn));
    return o;
}

// 8. Engine properties.
Outcome engine_properties() {
    Outcome o;
    {
        auto blk = build_dff();
        auto ckt = mrlsim::bind(blk, "Xd", {"d", "clk", "q", "vdd"}).netlist;
        auto& top = ckt.top.devices;
        top.push_back(make_vsource("Vd", "d", "0", SourceWave::pwl({{0, 0}, {1e-9, 0}, {1.01e-9, 1}})));
        top.push_back(make_vsource("Vclk", "clk", "0",
                                   SourceWave::pwl({{0, 0}, {0.5e-9, 0}, {0.51e-9, 1}, {1e-9, 1}, {1.01e-9, 0},
                                                    {1.5e-9, 0}, {1.51e-9, 1}})));
        top.push_back(make_vsource("Vdd", "vdd", "0", SourceWave::constant(1)));
        const auto f = expand(ckt);
        SimOptions so;
        so.tstop = 2e-9;
        const auto w1 = run_transient(f, so);
        const auto w2 = run_transient(f, so);
        o.check(w1 == w2, fmt("dff transient repeated: bit-identical over %zu samples", w1.size()));
        const double kcl = fixtures::max_kcl_residual(f, w1);
        o.check(kcl < 1e-9, fmt("max KCL residual %.3g A over every node and step", kcl));
    }
    {
        // Capacitor charging from 0 V toward a DC source.
        Circuit c;
        c.top.devices = {make_vsource("V1", "in", "0", SourceWave::constant(1.0)), make_resistor("R1", "in", "out", 1e3),
                         make_capacitor("C1", "out", "0", 1e-12, 0.0)};
        const auto f = expand(c);
        auto error_at = [&](double h) {
            SimOptions so;
            so.tstep = h;
            so.tstop = 1e-9;
            const auto w = run_transient(f, so);
            return std::abs(w.voltage("out").back() - (1.0 - std::exp(-1.0)));
        };
        const double e1 = error_at(20e-12), e2 = error_at(10e-12), e3 = error_at(5e-12);
        const double r12 = e1 / e2, r23 = e2 / e3;
        o.check(std::abs(r12 - 2) < 0.2 && std::abs(r23 - 2) < 0.2,
                fmt("RC error %.3g -> %.3g -> %.3g V, ratios %.3f, %.3f", e1, e2, e3, r12, r23));
    }
    return o;
}

// 9. Parser round trip and structural validity of every generated block.
Outcome parser_round_trip() {
    Outcome o;
    for (const auto& name : block_names()) {
        const auto blk = build_block(name);
        const auto text = serialize(blk.netlist);
        const auto back = parse(text);
        const bool fixpoint = back == blk.netlist && serialize(back) == text;
        const auto bound = mrlsim::bind(blk, "Xdut", blk.ports);
        const auto diags = validate(expand(bound.netlist));
        const auto errors = std::count_if(diags.begin(), diags.end(),
                                          [](const Diagnostic& d) { return d.severity == Severity::Error; });
        o.check(fixpoint && errors == 0, fmt("%s: %s, %ld validation errors", name.c_str(),
                                             fixpoint ? "fixpoint" : "round trip differs", static_cast<long>(errors)));
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"device census", device_census},
        {"area saving", area_saving},
        {"divider levels", divider_levels},
        {"gate truth tables", gate_equivalence},
        {"sequential equivalence", sequential_equivalence},
        {"pinched hysteresis", pinched_hysteresis},
        {"measurement calibration", measurement_calibration},
        {"engine properties", engine_properties},
        {"parser round trip", parser_round_trip},
    };
    int failed = 0;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        Outcome out;
        try {
            out = criteria[n].second();
        } catch (const std::exception& e) {
            out.pass = false;
            out.details.push_back(std::string("exception: ") + e.what());
        }
        std::printf("[%s] %zu %s\n", out.pass ? "PASS" : "FAIL", n + 1, criteria[n].first);
        for (const auto& d : out.details) std::printf("       %s\n", d.c_str());
        std::fflush(stdout);
        failed += out.pass ? 0 : 1;
    }
    std::printf("%zu/%zu criteria pass\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
