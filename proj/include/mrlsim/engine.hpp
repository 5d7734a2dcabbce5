#pragma once

// Fixed-step transient analysis of a FlatCircuit.
//
// Each step solves the resistive network by modified nodal analysis with
// memristor states frozen, iterating MOSFET switch regions to a fixed point,
// and then advances every memristor state with explicit midpoint sub-steps
// under the solved branch voltage. Capacitors use backward-Euler companions;
// at t = 0 they are held at their initial voltage.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mrlsim/devices.hpp"
#include "mrlsim/netlist.hpp"

namespace mrlsim {

class SolverError : public std::runtime_error {
public:
    SolverError(double time, const std::string& what, std::vector<std::string> subjects = {})
        : std::runtime_error("t=" + detail::format_number(time) + " s: " + what), time_(time),
          subjects_(std::move(subjects)) {}

    [[nodiscard]] double time() const { return time_; }
    /// Offending nets or devices.
    [[nodiscard]] const std::vector<std::string>& subjects() const { return subjects_; }

private:
    double time_;
    std::vector<std::string> subjects_;
};

struct SimOptions {
    double tstep = 1e-12;
    double tstop = 1e-9;
    int max_switch_iters = 50;
    double voltage_tol = 1e-6;
    int state_substeps = 4;
    bool clamp_states = true;

    [[nodiscard]] bool valid() const {
        return tstep > 0 && tstop >= tstep && max_switch_iters >= 1 && state_substeps >= 1 && voltage_tol > 0;
    }

    static SimOptions from(const Analysis& a) {
        SimOptions o;
        o.tstep = a.tstep;
        o.tstop = a.tstop;
        return o;
    }
};

/// Sampled simulation results. Every vector has one entry per time sample.
struct Waveform {
    std::vector<double> time;
    std::vector<std::string> nets;  // nets[0] is ground
    std::vector<std::vector<double>> voltages;
    std::vector<std::string> sources;
    std::vector<std::vector<double>> source_voltages;  // V(plus) - V(minus)
    std::vector<std::vector<double>> source_currents;  // delivered out of the plus terminal
    std::vector<std::string> memristors;
    std::vector<std::vector<double>> states;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t size() const { return time.size(); }

    [[nodiscard]] bool has_net(std::string_view name) const { return find(nets, name).has_value(); }

    [[nodiscard]] std::span<const double> voltage(std::string_view net) const {
        return voltages.at(require(nets, net, "net"));
    }
    [[nodiscard]] std::span<const double> current(std::string_view source) const {
        return source_currents.at(require(sources, source, "source"));
    }
    [[nodiscard]] std::span<const double> source_voltage(std::string_view source) const {
        return source_voltages.at(require(sources, source, "source"));
    }
    [[nodiscard]] std::span<const double> state(std::string_view memristor) const {
        return states.at(require(memristors, memristor, "memristor"));
    }

    bool operator==(const Waveform&) const = default;

private:
    static std::optional<std::size_t> find(const std::vector<std::string>& names, std::string_view name) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return i;
        if (!names.empty() && names.front() == "0" && detail::is_ground(name)) return 0;
        return std::nullopt;
    }
    static std::size_t require(const std::vector<std::string>& names, std::string_view name, const char* what) {
        auto i = find(names, name);
        if (!i) throw std::out_of_range(std::string("unknown ") + what + " '" + std::string(name) + "'");
        return *i;
    }
};

/// State carried from one accepted time point to the next.
struct CircuitState {
    std::vector<double> node_voltages;  // per net
    std::vector<double> memristor_x;    // per memristor, in device order
    std::vector<char> mosfet_on;        // per mosfet, warm start for region iteration
};

struct StepResult {
    std::vector<double> node_voltages;    // per net, ground included
    std::vector<double> source_currents;  // per source, delivered out of the plus terminal
    std::vector<char> mosfet_on;
    int iterations = 0;
    bool converged = true;
    std::vector<std::string> unsettled;  // mosfets still flipping when not converged
};

/// Builds and solves the nodal system for one FlatCircuit. Holds only
/// scratch storage; all circuit state is passed in.
class NetworkSolver {
public:
    NetworkSolver(const FlatCircuit& flat, SimOptions options) : flat_(flat), opt_(options) {
        for (std::size_t i = 0; i < flat_.devices.size(); ++i) {
            const auto& d = flat_.devices[i];
            if (d.nodes.size() != (d.kind == DeviceKind::Mosfet ? 4u : 2u))
                throw SolverError(0, d.name + ": wrong terminal count", {d.name});
            for (auto n : d.nodes)
                if (n >= flat_.nets.size()) throw SolverError(0, d.name + ": terminal out of range", {d.name});
            switch (d.kind) {
                case DeviceKind::Memristor: memristors_.push_back(i); break;
                case DeviceKind::Mosfet: mosfets_.push_back(i); break;
                case DeviceKind::VSource: sources_.push_back(i); break;
                case DeviceKind::Capacitor: capacitors_.push_back(i); break;
                case DeviceKind::Resistor: break;
            }
        }
        auto floating = detail::unreachable_nets(flat_, true);
        if (!floating.empty()) {
            std::vector<std::string> names;
            for (auto n : floating) names.push_back(flat_.nets[n]);
            std::string list;
            for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
            throw SolverError(0, "singular matrix: floating subnetwork {" + list + "}", names);
        }
    }

    [[nodiscard]] const std::vector<std::size_t>& memristors() const { return memristors_; }
    [[nodiscard]] const std::vector<std::size_t>& mosfets() const { return mosfets_; }
    [[nodiscard]] const std::vector<std::size_t>& sources() const { return sources_; }
    [[nodiscard]] const std::vector<std::size_t>& capacitors() const { return capacitors_; }
    [[nodiscard]] const FlatCircuit& circuit() const { return flat_; }
    [[nodiscard]] const SimOptions& options() const { return opt_; }

    /// Initial state: memristors at x0 (0.5 when unset), capacitors at ic,
    /// switch regions unknown.
    [[nodiscard]] CircuitState initial_state() const {
        CircuitState s;
        s.node_voltages.assign(flat_.nets.size(), 0.0);
        for (auto i : memristors_) s.memristor_x.push_back(std::get<FlatMemristor>(flat_.devices[i].model).x0.value_or(0.5));
        s.mosfet_on.assign(mosfets_.size(), 0);
        return s;
    }

    /// Solves the network at time t. dt == 0 selects the initial point,
    /// where capacitors are pinned to their initial voltage.
    StepResult solve(double t, const CircuitState& prev, double dt) {
        const bool initial = dt <= 0;
        const std::size_t n_nodes = flat_.nets.size() - 1;
        const std::size_t dim = n_nodes + sources_.size() + (initial ? capacitors_.size() : 0);
        A_.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        b_.resize(static_cast<Eigen::Index>(dim));

        std::vector<char> regions = prev.mosfet_on;
        if (regions.size() != mosfets_.size()) regions.assign(mosfets_.size(), 0);
        if (initial) regions = desired_regions(prev.node_voltages);

        const int budget = opt_.max_switch_iters + (initial ? 2 * static_cast<int>(mosfets_.size()) : 0);
        std::set<std::vector<char>> visited;
        bool single_flip = false;
        Eigen::VectorXd last;
        Eigen::VectorXd best;
        std::vector<char> best_regions;
        double best_change = std::numeric_limits<double>::infinity();

        StepResult out;
        for (int iter = 1; iter <= budget; ++iter) {
            assemble(t, prev, dt, regions, initial);
            Eigen::VectorXd x = linear_solve(t);
            std::vector<double> v = node_voltages(x);
            std::vector<char> desired = desired_regions(v);
            out.iterations = iter;
            if (desired == regions) return finish(x, regions, out);

            if (last.size() == x.size()) {
                const double change = (x.head(static_cast<Eigen::Index>(n_nodes)) -
                                       last.head(static_cast<Eigen::Index>(n_nodes))).cwiseAbs().maxCoeff();
                if (change < best_change) {
                    best_change = change;
                    best = x;
                    best_regions = regions;
                }
            }
            last = x;
            visited.insert(regions);
            if (!single_flip && visited.count(desired)) single_flip = true;
            if (single_flip) {
                for (std::size_t k = 0; k < regions.size(); ++k)
                    if (regions[k] != desired[k]) {
                        regions[k] = desired[k];
                        break;
                    }
            } else {
                regions = desired;
            }
        }

        out.converged = false;
        if (best.size() == 0) {
            best = last;
            best_regions = regions;
        }
        std::vector<char> desired = desired_regions(node_voltages(best));
        for (std::size_t k = 0; k < desired.size(); ++k)
            if (desired[k] != best_regions[k]) out.unsettled.push_back(flat_.devices[mosfets_[k]].name);
        return finish(best, best_regions, out);
    }

    /// Advances memristor states over dt under frozen node voltages.
    void advance_states(std::vector<double>& x, const std::vector<double>& v, double dt) const {
        const double h = dt / opt_.state_substeps;
        for (std::size_t k = 0; k < memristors_.size(); ++k) {
            const auto& d = flat_.devices[memristors_[k]];
            const auto& m = std::get<FlatMemristor>(d.model);
            const double vb = m.polarity * (v[d.nodes[0]] - v[d.nodes[1]]);
            double xs = x[k];
            for (int s = 0; s < opt_.state_substeps; ++s) {
                const double k1 = state_derivative({xs}, vb, m.params);
                const double k2 = state_derivative({std::clamp(xs + 0.5 * h * k1, 0.0, 1.0)}, vb, m.params);
                xs += h * k2;
                if (opt_.clamp_states) xs = std::clamp(xs, 0.0, 1.0);
            }
            x[k] = xs;
        }
    }

private:
    const FlatCircuit& flat_;
    SimOptions opt_;
    std::vector<std::size_t> memristors_, mosfets_, sources_, capacitors_;
    Eigen::MatrixXd A_;
    Eigen::VectorXd b_;

    [[nodiscard]] std::vector<char> desired_regions(const std::vector<double>& v) const {
        std::vector<char> r(mosfets_.size());
        for (std::size_t k = 0; k < mosfets_.size(); ++k) {
            const auto& d = flat_.devices[mosfets_[k]];
            const auto& m = std::get<FlatMosfet>(d.model);
            r[k] = mosfet_on(v[d.nodes[1]] - v[d.nodes[2]], m.params) ? 1 : 0;
        }
        return r;
    }

    void conductance(std::size_t a, std::size_t b, double g) {
        const auto ia = static_cast<Eigen::Index>(a) - 1;
        const auto ib = static_cast<Eigen::Index>(b) - 1;
        if (a) A_(ia, ia) += g;
        if (b) A_(ib, ib) += g;
        if (a && b) {
            A_(ia, ib) -= g;
            A_(ib, ia) -= g;
        }
    }

    void current_into(std::size_t node, double i) {
        if (node) b_(static_cast<Eigen::Index>(node) - 1) += i;
    }

    void voltage_branch(Eigen::Index row, std::size_t plus, std::size_t minus, double value) {
        if (plus) {
            A_(static_cast<Eigen::Index>(plus) - 1, row) += 1;
            A_(row, static_cast<Eigen::Index>(plus) - 1) += 1;
        }
        if (minus) {
            A_(static_cast<Eigen::Index>(minus) - 1, row) -= 1;
            A_(row, static_cast<Eigen::Index>(minus) - 1) -= 1;
        }
        b_(row) = value;
    }

    void assemble(double t, const CircuitState& prev, double dt, const std::vector<char>& regions, bool initial) {
        A_.setZero();
        b_.setZero();
        const auto n_nodes = static_cast<Eigen::Index>(flat_.nets.size() - 1);
        std::size_t mem = 0, mos = 0, src = 0, cap = 0;
        for (const auto& d : flat_.devices) {
            const std::size_t a = d.nodes[0], b = d.nodes[1];
            switch (d.kind) {
                case DeviceKind::Resistor:
                    conductance(a, b, 1.0 / std::get<FlatResistor>(d.model).resistance);
                    break;
                case DeviceKind::Memristor: {
                    const auto& m = std::get<FlatMemristor>(d.model);
                    conductance(a, b, memristor_conductance({prev.memristor_x[mem++]}, m.params));
                    break;
                }
                case DeviceKind::Mosfet: {
                    const auto& m = std::get<FlatMosfet>(d.model).params;
                    conductance(d.nodes[0], d.nodes[2], regions[mos++] ? 1.0 / m.r_ds_on : 1.0 / m.r_ds_off);
                    break;
                }
                case DeviceKind::VSource:
                    voltage_branch(n_nodes + static_cast<Eigen::Index>(src++), a, b,
                                   std::get<FlatSource>(d.model).wave.at(t));
                    break;
                case DeviceKind::Capacitor: {
                    const auto& c = std::get<FlatCapacitor>(d.model);
                    if (initial) {
                        voltage_branch(n_nodes + static_cast<Eigen::Index>(sources_.size() + cap++), a, b, c.ic);
                    } else {
                        const double g = c.capacitance / dt;
                        const double v_prev = prev.node_voltages[a] - prev.node_voltages[b];
                        conductance(a, b, g);
                        current_into(a, g * v_prev);
                        current_into(b, -g * v_prev);
                    }
                    break;
                }
            }
        }
    }

    Eigen::VectorXd linear_solve(double t) {
        if (A_.rows() == 0) return Eigen::VectorXd{};
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(A_);
        Eigen::VectorXd x = lu.solve(b_);
        const double residual = (A_ * x - b_).cwiseAbs().maxCoeff();
        const double scale = 1.0 + b_.cwiseAbs().maxCoeff();
        if (!x.allFinite() || residual > 1e-6 * scale)
            throw SolverError(t, "singular matrix (voltage-source loop or disconnected network)");
        return x;
    }

    [[nodiscard]] std::vector<double> node_voltages(const Eigen::VectorXd& x) const {
        std::vector<double> v(flat_.nets.size(), 0.0);
        for (std::size_t i = 1; i < v.size(); ++i) v[i] = x(static_cast<Eigen::Index>(i) - 1);
        return v;
    }

    StepResult& finish(const Eigen::VectorXd& x, const std::vector<char>& regions, StepResult& out) const {
        out.node_voltages = node_voltages(x);
        const auto n_nodes = static_cast<Eigen::Index>(flat_.nets.size() - 1);
        out.source_currents.resize(sources_.size());
        for (std::size_t k = 0; k < sources_.size(); ++k)
            out.source_currents[k] = -x(n_nodes + static_cast<Eigen::Index>(k));
        out.mosfet_on = regions;
        return out;
    }
};

/// One network solve at time t from a previous accepted state. dt == 0
/// solves the initial point.
inline StepResult solve_step(const FlatCircuit& flat, double t, const CircuitState& prev, double dt = 0,
                             const SimOptions& options = {}) {
    NetworkSolver solver(flat, options);
    return solver.solve(t, prev, dt);
}

/// Runs a fixed-step transient from t = 0 to tstop. Deterministic:
/// identical inputs give bit-identical waveforms.
inline Waveform run_transient(const FlatCircuit& flat, const SimOptions& options) {
    if (!options.valid()) throw std::invalid_argument("invalid simulation options");
    NetworkSolver solver(flat, options);
    const auto& devs = flat.devices;

    Waveform w;
    w.nets = flat.nets;
    w.voltages.resize(flat.nets.size());
    for (auto i : solver.sources()) w.sources.push_back(devs[i].name);
    for (auto i : solver.memristors()) w.memristors.push_back(devs[i].name);
    w.source_voltages.resize(w.sources.size());
    w.source_currents.resize(w.sources.size());
    w.states.resize(w.memristors.size());

    const auto steps = static_cast<std::size_t>(std::llround(options.tstop / options.tstep));
    w.time.reserve(steps + 1);
    for (auto& v : w.voltages) v.reserve(steps + 1);

    CircuitState state = solver.initial_state();
    auto record = [&](double t, const StepResult& r) {
        w.time.push_back(t);
        for (std::size_t n = 0; n < r.node_voltages.size(); ++n) w.voltages[n].push_back(r.node_voltages[n]);
        for (std::size_t k = 0; k < solver.sources().size(); ++k) {
            const auto& d = devs[solver.sources()[k]];
            w.source_voltages[k].push_back(r.node_voltages[d.nodes[0]] - r.node_voltages[d.nodes[1]]);
            w.source_currents[k].push_back(r.source_currents[k]);
        }
        for (std::size_t k = 0; k < state.memristor_x.size(); ++k) w.states[k].push_back(state.memristor_x[k]);
        if (!r.converged) {
            std::string list;
            for (const auto& n : r.unsettled) list += (list.empty() ? "" : ", ") + n;
            w.warnings.push_back("t=" + detail::format_number(t) +
                                 " s: switch regions did not settle, accepted smallest-change iterate {" + list + "}");
        }
    };

    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * options.tstep;
        StepResult r = solver.solve(t, state, k == 0 ? 0.0 : options.tstep);
        record(t, r);
        state.node_voltages = r.node_voltages;
        state.mosfet_on = r.mosfet_on;
        if (k < steps) solver.advance_states(state.memristor_x, state.node_voltages, options.tstep);
    }
    return w;
}

}  // namespace mrlsim
