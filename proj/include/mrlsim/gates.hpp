#pragma once

// Netlist generators for memristor ratioed logic (MRL) blocks.
//
// AND and OR are two memristors in series between the inputs with the
// output at the midpoint. In AND both bar terminals face the output, so the
// device on a high input is driven off and the output follows the lower
// input; OR reverses both devices. Inversion and level restoration come from
// a CMOS inverter. Larger blocks are hierarchical compositions:
//
//   NAND  = AND + NOT                NOR = OR + NOT
//   XOR   = AND( OR(a,b), NAND(a,b) )                     6 memristors, 2 MOSFETs
//   latch = NOT(d), S = AND(d,en), R = AND(!d,en),
//           q = NOR(R, qb), qb = NOR(S, q)                8 memristors, 6 MOSFETs
//   DFF   = NOT(clk) + master latch (en = !clk) + slave latch (en = clk)
//   XAX   = DFF(x), DFF(a), DFF( ((x ^ xr) & ar) ^ s )
//
// Blocks carrying CMOS take the supply as a trailing `vdd` port.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mrlsim/devices.hpp"
#include "mrlsim/netlist.hpp"

namespace mrlsim {

enum class GateKind { And, Or, Nand, Nor, Not, Xor };

[[nodiscard]] inline std::string_view gate_name(GateKind k) {
    switch (k) {
        case GateKind::And: return "and";
        case GateKind::Or: return "or";
        case GateKind::Nand: return "nand";
        case GateKind::Nor: return "nor";
        case GateKind::Not: return "not";
        case GateKind::Xor: return "xor";
    }
    return "?";
}

[[nodiscard]] inline std::optional<GateKind> gate_from_name(std::string_view s) {
    for (auto k : {GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor, GateKind::Not, GateKind::Xor})
        if (gate_name(k) == s) return k;
    return std::nullopt;
}

[[nodiscard]] inline std::size_t gate_inputs(GateKind k) { return k == GateKind::Not ? 1 : 2; }

struct DeviceCensus {
    std::size_t memristors = 0;
    std::size_t transistors = 0;
    std::size_t inverter_cells = 0;

    DeviceCensus& operator+=(const DeviceCensus& o) {
        memristors += o.memristors;
        transistors += o.transistors;
        inverter_cells += o.inverter_cells;
        return *this;
    }
    friend DeviceCensus operator+(DeviceCensus a, const DeviceCensus& b) { return a += b; }
    friend DeviceCensus operator*(std::size_t n, const DeviceCensus& c) {
        return {n * c.memristors, n * c.transistors, n * c.inverter_cells};
    }
    bool operator==(const DeviceCensus&) const = default;
};

/// Device models shared by every generated block.
struct Technology {
    MemristorParams memristor;
    MosfetParams nmos{Polarity::N, 0.5, 100, 1e9};
    MosfetParams pmos{Polarity::P, 0.5, 100, 1e9};
    double x0 = 0.5;
    std::string memristor_model = "mrl_mem";
    std::string nmos_model = "mrl_nmos";
    std::string pmos_model = "mrl_pmos";
};

/// Which XAX stages are registered. The x stage is mandatory: without it
/// x ^ xr collapses to a constant.
struct XaxWiring {
    bool x_stage = true;
    bool a_stage = true;
    bool acc_stage = true;

    [[nodiscard]] bool valid() const { return x_stage; }
    [[nodiscard]] std::size_t registers() const { return std::size_t{x_stage} + a_stage + acc_stage; }
    bool operator==(const XaxWiring&) const = default;
};

/// A generated block: the netlist holds the model cards and every
/// subcircuit definition the block needs; `subckt` names the top one.
struct Block {
    std::string subckt;
    std::vector<std::string> ports;
    Circuit netlist;
    DeviceCensus census;
};

// ---------------------------------------------------------------------------
// Census

namespace detail {

inline DeviceCensus census_of_body(const Circuit& c, const Body& body, std::vector<std::string>& stack) {
    DeviceCensus out;
    std::vector<const Device*> pmos, nmos;
    for (const auto& d : body.devices) {
        if (d.kind == DeviceKind::Memristor) ++out.memristors;
        if (d.kind != DeviceKind::Mosfet) continue;
        ++out.transistors;
        auto it = c.models.find(d.model);
        if (it == c.models.end()) continue;
        if (it->second.kind == ModelKind::Pmos) pmos.push_back(&d);
        else if (it->second.kind == ModelKind::Nmos) nmos.push_back(&d);
    }
    // An inverter cell is a P/N pair sharing gate and drain.
    std::vector<bool> used(nmos.size(), false);
    for (const auto* p : pmos)
        for (std::size_t k = 0; k < nmos.size(); ++k)
            if (!used[k] && nmos[k]->terminals[0] == p->terminals[0] && nmos[k]->terminals[1] == p->terminals[1]) {
                used[k] = true;
                ++out.inverter_cells;
                break;
            }
    for (const auto& x : body.instances) {
        auto it = c.subckts.find(x.subckt);
        if (it == c.subckts.end()) throw NetlistError(x.name + ": undefined subcircuit '" + x.subckt + "'");
        for (const auto& s : stack)
            if (s == x.subckt) throw NetlistError(x.name + ": recursive instantiation of '" + x.subckt + "'");
        stack.push_back(x.subckt);
        out += census_of_body(c, it->second.body, stack);
        stack.pop_back();
    }
    return out;
}

}  // namespace detail

/// Device census of one subcircuit definition, by recursive traversal.
[[nodiscard]] inline DeviceCensus census(const Circuit& c, const std::string& subckt) {
    auto it = c.subckts.find(subckt);
    if (it == c.subckts.end()) throw NetlistError("undefined subcircuit '" + subckt + "'");
    std::vector<std::string> stack{subckt};
    return detail::census_of_body(c, it->second.body, stack);
}

/// Census of the top-level scope.
[[nodiscard]] inline DeviceCensus census(const Circuit& c) {
    std::vector<std::string> stack;
    return detail::census_of_body(c, c.top, stack);
}

// ---------------------------------------------------------------------------
// Generators

namespace detail {

class Library {
public:
    explicit Library(const Technology& tech) : tech_(tech) {
        ModelCard mem{tech.memristor_model, ModelKind::Memristor, {}};
        const auto& p = tech.memristor;
        mem.params = {{"r_on", p.r_on},     {"r_off", p.r_off}, {"l_disc", p.l_disc}, {"l_taox", p.l_taox},
                      {"area", p.area},     {"n_min", p.n_min}, {"n_max", p.n_max},   {"z_v0", p.z_v0},
                      {"c31", p.c31},       {"v_char", p.v_char}, {"p", p.window_exponent}};
        if (p.state_map == StateMap::ResistanceLinear) mem.params["state_map"] = 1;
        c_.models.emplace(mem.name, mem);
        c_.models.emplace(tech.nmos_model, mos_card(tech.nmos_model, ModelKind::Nmos, tech.nmos));
        c_.models.emplace(tech.pmos_model, mos_card(tech.pmos_model, ModelKind::Pmos, tech.pmos));
    }

    std::string gate(GateKind k) {
        const std::string name = "mrl_" + std::string(gate_name(k));
        if (c_.subckts.count(name)) return name;
        Subckt s{name, {}, {}};
        auto& b = s.body;
        const auto& mm = tech_.memristor_model;
        switch (k) {
            case GateKind::And:
                s.ports = {"a", "b", "out"};
                b.devices = {make_memristor("Y1", "out", "a", mm, tech_.x0), make_memristor("Y2", "out", "b", mm, tech_.x0)};
                break;
            case GateKind::Or:
                s.ports = {"a", "b", "out"};
                b.devices = {make_memristor("Y1", "a", "out", mm, tech_.x0), make_memristor("Y2", "b", "out", mm, tech_.x0)};
                break;
            case GateKind::Not:
                s.ports = {"in", "out", "vdd"};
                b.devices = {make_mosfet("MP", "out", "in", "vdd", "vdd", tech_.pmos_model),
                             make_mosfet("MN", "out", "in", "0", "0", tech_.nmos_model)};
                break;
            case GateKind::Nand:
            case GateKind::Nor: {
                const auto pair = gate(k == GateKind::Nand ? GateKind::And : GateKind::Or);
                const auto inv = gate(GateKind::Not);
                s.ports = {"a", "b", "out", "vdd"};
                b.instances = {{"X1", pair, {"a", "b", "n1"}}, {"Xinv", inv, {"n1", "out", "vdd"}}};
                break;
            }
            case GateKind::Xor: {
                const auto or_ = gate(GateKind::Or);
                const auto nand = gate(GateKind::Nand);
                const auto and_ = gate(GateKind::And);
                s.ports = {"a", "b", "out", "vdd"};
                b.instances = {{"Xor", or_, {"a", "b", "o"}},
                               {"Xnand", nand, {"a", "b", "n", "vdd"}},
                               {"Xand", and_, {"o", "n", "out"}}};
                break;
            }
        }
        c_.subckts.emplace(name, std::move(s));
        return name;
    }

    std::string dlatch() {
        const std::string name = "mrl_dlatch";
        if (c_.subckts.count(name)) return name;
        const auto inv = gate(GateKind::Not);
        const auto and_ = gate(GateKind::And);
        const auto nor = gate(GateKind::Nor);
        Subckt s{name, {"d", "en", "q", "vdd"}, {}};
        s.body.instances = {{"Xinv", inv, {"d", "db", "vdd"}},
                            {"Xs", and_, {"d", "en", "s"}},
                            {"Xr", and_, {"db", "en", "r"}},
                            {"Xq", nor, {"r", "qb", "q", "vdd"}},
                            {"Xqb", nor, {"s", "q", "qb", "vdd"}}};
        c_.subckts.emplace(name, std::move(s));
        return name;
    }

    std::string dff() {
        const std::string name = "mrl_dff";
        if (c_.subckts.count(name)) return name;
        const auto inv = gate(GateKind::Not);
        const auto latch = dlatch();
        Subckt s{name, {"d", "clk", "q", "vdd"}, {}};
        s.body.instances = {{"Xclk", inv, {"clk", "clkb", "vdd"}},
                            {"Xmaster", latch, {"d", "clkb", "m", "vdd"}},
                            {"Xslave", latch, {"m", "clk", "q", "vdd"}}};
        c_.subckts.emplace(name, std::move(s));
        return name;
    }

    std::string xax(const XaxWiring& w) {
        if (!w.valid()) throw std::invalid_argument("invalid XAX wiring: the x stage must be registered");
        std::string name = "mrl_xax";
        if (!(w == XaxWiring{})) name += std::string("_") + (w.x_stage ? "x" : "") + (w.a_stage ? "a" : "") + (w.acc_stage ? "s" : "");
        if (c_.subckts.count(name)) return name;
        const auto reg = dff();
        const auto xor_ = gate(GateKind::Xor);
        const auto and_ = gate(GateKind::And);
        Subckt s{name, {"x_in", "a_in", "s_in", "x_out", "acc_out", "clk", "vdd"}, {}};
        auto& in = s.body.instances;
        in.push_back({"Xreg_x", reg, {"x_in", "clk", "x_out", "vdd"}});
        std::string ar = "a_in";
        if (w.a_stage) {
            ar = "ar";
            in.push_back({"Xreg_a", reg, {"a_in", "clk", "ar", "vdd"}});
        }
        in.push_back({"Xxor1", xor_, {"x_in", "x_out", "p", "vdd"}});
        in.push_back({"Xand", and_, {"p", ar, "g"}});
        if (w.acc_stage) {
            in.push_back({"Xxor2", xor_, {"g", "s_in", "acc_d", "vdd"}});
            in.push_back({"Xreg_acc", reg, {"acc_d", "clk", "acc_out", "vdd"}});
        } else {
            in.push_back({"Xxor2", xor_, {"g", "s_in", "acc_out", "vdd"}});
        }
        c_.subckts.emplace(name, std::move(s));
        return name;
    }

    Block finish(const std::string& top, std::string title) {
        c_.title = std::move(title);
        Block b;
        b.subckt = top;
        b.ports = c_.subckts.at(top).ports;
        b.census = census(c_, top);
        b.netlist = std::move(c_);
        return b;
    }

private:
    const Technology& tech_;
    Circuit c_;

    static ModelCard mos_card(const std::string& name, ModelKind kind, const MosfetParams& p) {
        return {name, kind, {{"vth", p.v_th}, {"r_on", p.r_ds_on}, {"r_off", p.r_ds_off}}};
    }
};

}  // namespace detail

/// Adds a top-level instance of the block bound to `nets`.
inline Block bind(Block b, std::string instance, std::vector<std::string> nets) {
    if (nets.size() != b.ports.size())
        throw std::invalid_argument(b.subckt + ": expected " + std::to_string(b.ports.size()) + " port nets, got " +
                                    std::to_string(nets.size()));
    b.netlist.top.instances.push_back({std::move(instance), b.subckt, std::move(nets)});
    return b;
}

[[nodiscard]] inline Block build_gate(GateKind kind, const Technology& tech = {}) {
    detail::Library lib(tech);
    auto top = lib.gate(kind);
    return lib.finish(top, "* MRL " + std::string(gate_name(kind)) + " gate");
}

[[nodiscard]] inline Block build_gate(GateKind kind, std::string instance, std::vector<std::string> nets,
                                      const Technology& tech = {}) {
    return bind(build_gate(kind, tech), std::move(instance), std::move(nets));
}

[[nodiscard]] inline Block build_dlatch(const Technology& tech = {}) {
    detail::Library lib(tech);
    auto top = lib.dlatch();
    return lib.finish(top, "* MRL D-latch");
}

[[nodiscard]] inline Block build_dff(const Technology& tech = {}) {
    detail::Library lib(tech);
    auto top = lib.dff();
    return lib.finish(top, "* MRL master-slave D flip-flop");
}

[[nodiscard]] inline Block build_xax(const XaxWiring& wiring = {}, const Technology& tech = {}) {
    detail::Library lib(tech);
    auto top = lib.xax(wiring);
    return lib.finish(top, "* MRL XAX module");
}

inline const std::vector<std::string>& block_names() {
    static const std::vector<std::string> names{"and", "or", "nand", "nor", "not", "xor", "dlatch", "dff", "xax"};
    return names;
}

/// Builds a block by its CLI name.
[[nodiscard]] inline Block build_block(std::string_view name, const Technology& tech = {}) {
    if (auto g = gate_from_name(name)) return build_gate(*g, tech);
    if (name == "dlatch") return build_dlatch(tech);
    if (name == "dff") return build_dff(tech);
    if (name == "xax") return build_xax({}, tech);
    throw std::invalid_argument("unknown block '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Area

struct AreaReport {
    std::size_t cells = 0;
    std::size_t baseline_cells = 0;
    double cell_area = 0;      // um^2 per inverter cell
    double area = 0;           // um^2
    double baseline_area = 0;  // um^2
    double saving = 0;         // fraction of the baseline area
};

/// Inverter-footprint area estimate. Memristors sit in the upper metal
/// layers above the CMOS and add no footprint.
[[nodiscard]] inline AreaReport area_report(const DeviceCensus& c, std::size_t baseline_cells, double cell_area = 1.0) {
    if (baseline_cells == 0) throw std::invalid_argument("baseline cell count must be positive");
    AreaReport r;
    r.cells = c.inverter_cells;
    r.baseline_cells = baseline_cells;
    r.cell_area = cell_area;
    r.area = static_cast<double>(r.cells) * cell_area;
    r.baseline_area = static_cast<double>(baseline_cells) * cell_area;
    r.saving = (static_cast<double>(baseline_cells) - static_cast<double>(r.cells)) / static_cast<double>(baseline_cells);
    return r;
}

}  // namespace mrlsim
