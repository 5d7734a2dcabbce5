#pragma once

// Small circuits shared by the unit and acceptance tests.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mrlsim/mrlsim.hpp"

namespace fixtures {

inline mrlsim::ModelCard memristor_model(const std::string& name = "mem") {
    return {name, mrlsim::ModelKind::Memristor, {}};
}

/// Step source (0 -> v at t_step over t_rise) driving R into C to ground.
inline mrlsim::Circuit rc_step(double r, double c, double v = 1.0, double t_step = 100e-12, double t_rise = 1e-12) {
    mrlsim::Circuit ckt;
    ckt.title = "* rc step";
    ckt.top.devices.push_back(mrlsim::make_vsource("Vin", "in", "0",
                                                   mrlsim::SourceWave::pwl({{0, 0}, {t_step, 0}, {t_step + t_rise, v}})));
    ckt.top.devices.push_back(mrlsim::make_resistor("R1", "in", "out", r));
    ckt.top.devices.push_back(mrlsim::make_capacitor("C1", "out", "0", c));
    return ckt;
}

/// DC source across a resistor.
inline mrlsim::Circuit resistive_load(double v, double r) {
    mrlsim::Circuit ckt;
    ckt.title = "* resistive load";
    ckt.top.devices.push_back(mrlsim::make_vsource("Vdd", "vdd", "0", mrlsim::SourceWave::constant(v)));
    ckt.top.devices.push_back(mrlsim::make_resistor("R1", "vdd", "0", r));
    return ckt;
}

/// PWL approximation of amplitude * sin(2 pi f t), with breakpoints on every
/// multiple of `dt` so that the zero crossings fall on breakpoints.
inline mrlsim::SourceWave sine_pwl(double amplitude, double freq, int periods, double dt) {
    std::vector<mrlsim::PwlPoint> pts;
    const double t_end = periods / freq;
    const auto n = static_cast<long>(std::llround(t_end / dt));
    for (long k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const long half = std::llround(1.0 / (2.0 * freq * dt));
        const double v = (half > 0 && k % half == 0) ? 0.0 : amplitude * std::sin(2.0 * std::numbers::pi * freq * t);
        pts.push_back({t, v});
    }
    return mrlsim::SourceWave::pwl(std::move(pts));
}

/// Source directly across one memristor (plus terminal on the source side).
inline mrlsim::Circuit memristor_drive(mrlsim::SourceWave wave, double x0 = 0.5) {
    mrlsim::Circuit ckt;
    ckt.title = "* memristor drive";
    ckt.models.emplace("mem", memristor_model());
    ckt.top.devices.push_back(mrlsim::make_vsource("Vs", "a", "0", std::move(wave)));
    ckt.top.devices.push_back(mrlsim::make_memristor("Y1", "a", "0", "mem", x0));
    return ckt;
}

/// Memristive AND or OR divider with DC inputs and both devices starting at x0.
inline mrlsim::Circuit divider_gate(mrlsim::GateKind kind, bool a, bool b, double x0, double vdd = 1.0) {
    mrlsim::Technology tech;
    tech.x0 = x0;
    auto ckt = mrlsim::build_gate(kind, "X1", {"a", "b", "out"}, tech).netlist;
    ckt.top.devices.push_back(mrlsim::make_vsource("Va", "a", "0", mrlsim::SourceWave::constant(a ? vdd : 0.0)));
    ckt.top.devices.push_back(mrlsim::make_vsource("Vb", "b", "0", mrlsim::SourceWave::constant(b ? vdd : 0.0)));
    return ckt;
}

inline mrlsim::Waveform simulate(const mrlsim::Circuit& c, double tstep, double tstop) {
    mrlsim::SimOptions o;
    o.tstep = tstep;
    o.tstop = tstop;
    return mrlsim::run_transient(mrlsim::expand(c), o);
}

/// Largest Kirchhoff current-law residual over every non-ground node and
/// every time sample, recomputing each device current from the recorded
/// voltages and states.
inline double max_kcl_residual(const mrlsim::FlatCircuit& f, const mrlsim::Waveform& w) {
    using namespace mrlsim;
    double worst = 0;
    std::vector<double> sum(f.nets.size());
    for (std::size_t k = 1; k < w.size(); ++k) {
        std::fill(sum.begin(), sum.end(), 0.0);
        const double dt = w.time[k] - w.time[k - 1];
        std::size_t mem = 0, src = 0;
        auto v = [&](std::size_t node) { return w.voltages[node][k]; };
        for (const auto& d : f.devices) {
            const auto a = d.nodes[0], b = d.nodes[1];
            double i_ab = 0;  // current leaving node a through the device toward b
            switch (d.kind) {
                case DeviceKind::Resistor: i_ab = (v(a) - v(b)) / std::get<FlatResistor>(d.model).resistance; break;
                case DeviceKind::Capacitor: {
                    const double c = std::get<FlatCapacitor>(d.model).capacitance;
                    i_ab = c * ((v(a) - v(b)) - (w.voltages[a][k - 1] - w.voltages[b][k - 1])) / dt;
                    break;
                }
                case DeviceKind::Memristor: {
                    const auto& m = std::get<FlatMemristor>(d.model);
                    i_ab = memristor_current({w.states[mem][k]}, v(a) - v(b), m.params);
                    ++mem;
                    break;
                }
                case DeviceKind::VSource: i_ab = -w.source_currents[src++][k]; break;
                case DeviceKind::Mosfet: {
                    const auto& m = std::get<FlatMosfet>(d.model);
                    const auto g = d.nodes[1], s = d.nodes[2];
                    i_ab = (v(a) - v(s)) * mosfet_conductance(v(g) - v(s), v(a) - v(s), m.params);
                    sum[a] += i_ab;
                    sum[s] -= i_ab;
                    continue;
                }
            }
            sum[a] += i_ab;
            sum[b] -= i_ab;
        }
        for (std::size_t n = 1; n < sum.size(); ++n) worst = std::max(worst, std::abs(sum[n]));
    }
    return worst;
}

}  // namespace fixtures
