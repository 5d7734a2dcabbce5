#pragma once

// Hierarchical netlists: data model, a SPICE-like text grammar, subcircuit
// expansion into a flat simulation-ready circuit, and structural checks.
//
// Grammar (one card per line, '+' continues the previous card):
//
//   <title line>
//   R<name> n+ n- <value>
//   C<name> n+ n- <value> [ic=<v0>]
//   V<name> n+ n- DC <value> | PWL( t1 v1 t2 v2 ... )
//   Y<name> n+ n- <model> [x0=<val>] [polarity=1|-1]
//   M<name> nd ng ns nb <model>
//   X<name> <ports...> <subckt>
//   .model <name> memristor|nmos|pmos <key>=<val> ...
//   .subckt <name> <ports...>  ...  .ends
//   .tran <tstep> <tstop>
//   .end
//
// Ground is `0` or `gnd`. Full-line comments start with '*', trailing
// comments with ';'. Keywords and device letters are case-insensitive;
// identifiers are case-sensitive.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "mrlsim/devices.hpp"

namespace mrlsim {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, int column, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                             ": " + what),
          line_(line),
          column_(column) {}

    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Raised by expansion: undefined subcircuits/models, port mismatches, recursion.
class NetlistError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DeviceKind { Memristor, Mosfet, Resistor, Capacitor, VSource };

struct PwlPoint {
    double t = 0;
    double v = 0;
    bool operator==(const PwlPoint&) const = default;
};

struct SourceWave {
    enum class Kind { Dc, Pwl };
    Kind kind = Kind::Dc;
    double dc = 0;
    std::vector<PwlPoint> points;

    static SourceWave constant(double v) { return {Kind::Dc, v, {}}; }
    static SourceWave pwl(std::vector<PwlPoint> pts) { return {Kind::Pwl, 0, std::move(pts)}; }

    /// Value at time t; PWL holds its end values outside the breakpoints.
    [[nodiscard]] double at(double t) const {
        if (kind == Kind::Dc) return dc;
        if (points.empty()) return 0;
        if (t <= points.front().t) return points.front().v;
        if (t >= points.back().t) return points.back().v;
        auto hi = std::upper_bound(points.begin(), points.end(), t,
                                   [](double tt, const PwlPoint& p) { return tt < p.t; });
        auto lo = hi - 1;
        const double span = hi->t - lo->t;
        if (span <= 0) return hi->v;
        return lo->v + (hi->v - lo->v) * (t - lo->t) / span;
    }

    bool operator==(const SourceWave&) const = default;
};

/// A device card. `params` holds the numeric fields of the card:
/// "value" (R, C), "ic" (C), "x0" and "polarity" (Y).
struct Device {
    DeviceKind kind = DeviceKind::Resistor;
    std::string name;
    std::vector<std::string> terminals;
    std::string model;
    std::map<std::string, double> params;
    SourceWave wave;

    [[nodiscard]] std::optional<double> param(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end()) return std::nullopt;
        return it->second;
    }
    [[nodiscard]] std::optional<double> initial_state() const { return param("x0"); }

    bool operator==(const Device&) const = default;
};

struct Instance {
    std::string name;
    std::string subckt;
    std::vector<std::string> ports;
    bool operator==(const Instance&) const = default;
};

enum class ModelKind { Memristor, Nmos, Pmos };

struct ModelCard {
    std::string name;
    ModelKind kind = ModelKind::Memristor;
    std::map<std::string, double> params;
    bool operator==(const ModelCard&) const = default;
};

struct Analysis {
    double tstep = 0;
    double tstop = 0;
    bool operator==(const Analysis&) const = default;
};

/// Devices and instances of one scope.
struct Body {
    std::vector<Device> devices;
    std::vector<Instance> instances;
    bool operator==(const Body&) const = default;

    [[nodiscard]] bool empty() const { return devices.empty() && instances.empty(); }
};

struct Subckt {
    std::string name;
    std::vector<std::string> ports;
    Body body;
    bool operator==(const Subckt&) const = default;
};

struct Circuit {
    std::string title;
    Body top;
    std::map<std::string, Subckt> subckts;
    std::map<std::string, ModelCard> models;
    std::vector<Analysis> analyses;
    bool operator==(const Circuit&) const = default;
};

// ---------------------------------------------------------------------------
// Small construction helpers, used by the block generators and tests.

inline Device make_resistor(std::string name, std::string a, std::string b, double ohms) {
    return {DeviceKind::Resistor, std::move(name), {std::move(a), std::move(b)}, {}, {{"value", ohms}}, {}};
}

inline Device make_capacitor(std::string name, std::string a, std::string b, double farads,
                             std::optional<double> ic = std::nullopt) {
    Device d{DeviceKind::Capacitor, std::move(name), {std::move(a), std::move(b)}, {}, {{"value", farads}}, {}};
    if (ic) d.params["ic"] = *ic;
    return d;
}

inline Device make_vsource(std::string name, std::string plus, std::string minus, SourceWave wave) {
    return {DeviceKind::VSource, std::move(name), {std::move(plus), std::move(minus)}, {}, {}, std::move(wave)};
}

inline Device make_memristor(std::string name, std::string plus, std::string minus, std::string model,
                             std::optional<double> x0 = std::nullopt, int polarity = 1) {
    Device d{DeviceKind::Memristor, std::move(name), {std::move(plus), std::move(minus)}, std::move(model), {}, {}};
    if (x0) d.params["x0"] = *x0;
    if (polarity != 1) d.params["polarity"] = polarity;
    return d;
}

inline Device make_mosfet(std::string name, std::string drain, std::string gate, std::string source,
                          std::string bulk, std::string model) {
    return {DeviceKind::Mosfet,
            std::move(name),
            {std::move(drain), std::move(gate), std::move(source), std::move(bulk)},
            std::move(model),
            {},
            {}};
}

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline bool is_ground(std::string_view net) { return net == "0" || lower(net) == "gnd"; }

/// Shortest decimal that round-trips exactly.
inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string_view device_letter(DeviceKind k) {
    switch (k) {
        case DeviceKind::Memristor: return "Y";
        case DeviceKind::Mosfet: return "M";
        case DeviceKind::Resistor: return "R";
        case DeviceKind::Capacitor: return "C";
        case DeviceKind::VSource: return "V";
    }
    return "?";
}

inline std::string_view model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Memristor: return "memristor";
        case ModelKind::Nmos: return "nmos";
        case ModelKind::Pmos: return "pmos";
    }
    return "?";
}

struct Token {
    std::string text;
    int line = 0;
    int column = 0;
};

using Card = std::vector<Token>;

inline std::vector<Card> split_cards(std::string_view text, std::string& title) {
    std::vector<Card> cards;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1) {
            title = std::string(line);
            continue;
        }
        if (auto semi = line.find(';'); semi != std::string_view::npos) line = line.substr(0, semi);

        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos || line[first] == '*') continue;

        Card tokens;
        bool continuation = line[first] == '+';
        std::size_t i = continuation ? first + 1 : first;
        while (i < line.size()) {
            char c = line[i];
            if (c == ' ' || c == '\t' || c == ',') {
                ++i;
            } else if (c == '(' || c == ')' || c == '=') {
                tokens.push_back({std::string(1, c), line_no, static_cast<int>(i + 1)});
                ++i;
            } else {
                std::size_t j = i;
                while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' &&
                       line[j] != '(' && line[j] != ')' && line[j] != '=')
                    ++j;
                tokens.push_back({std::string(line.substr(i, j - i)), line_no, static_cast<int>(i + 1)});
                i = j;
            }
        }
        if (continuation) {
            if (cards.empty()) throw ParseError(line_no, static_cast<int>(first + 1), "continuation line without a card");
            cards.back().insert(cards.back().end(), tokens.begin(), tokens.end());
        } else if (!tokens.empty()) {
            cards.push_back(std::move(tokens));
        }
    }
    return cards;
}

}  // namespace detail

/// Parses a number with an optional engineering suffix (f p n u m k meg g t).
inline std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::string_view body = s;
    if (body.front() == '+') body.remove_prefix(1);
    double value = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec != std::errc{} || !std::isfinite(value)) return std::nullopt;
    const std::string suffix = detail::lower(std::string_view(ptr, body.data() + body.size() - ptr));
    static const std::map<std::string, double> scale = {
        {"", 1.0},  {"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6},
        {"m", 1e-3}, {"k", 1e3},  {"meg", 1e6}, {"g", 1e9},  {"t", 1e12},
    };
    auto it = scale.find(suffix);
    if (it == scale.end()) return std::nullopt;
    return value * it->second;
}

namespace detail {

class Parser {
public:
    Circuit run(std::string_view text) {
        Circuit c;
        auto cards = split_cards(text, c.title);
        for (auto& card : cards) {
            if (done_) break;
            statement(c, card);
        }
        if (open_) {
            const auto& t = open_start_;
            throw ParseError(t.line, t.column, "missing .ends for subcircuit '" + open_->name + "'");
        }
        return c;
    }

private:
    bool done_ = false;
    std::optional<Subckt> open_;
    Token open_start_;
    std::set<std::string> top_names_;
    std::set<std::string> sub_names_;

    [[noreturn]] static void fail(const Token& t, const std::string& msg) { throw ParseError(t.line, t.column, msg); }

    static double number(const Token& t) {
        auto v = parse_number(t.text);
        if (!v) fail(t, "malformed number '" + t.text + "'");
        return *v;
    }

    /// key=value pairs from card[first..]
    static std::map<std::string, double> key_values(const Card& card, std::size_t first,
                                                    const std::set<std::string>& allowed) {
        std::map<std::string, double> out;
        std::size_t i = first;
        while (i < card.size()) {
            if (i + 2 >= card.size() || card[i + 1].text != "=") fail(card[i], "expected key=value, got '" + card[i].text + "'");
            const std::string key = lower(card[i].text);
            if (!allowed.empty() && !allowed.count(key)) fail(card[i], "unknown parameter '" + card[i].text + "'");
            if (out.count(key)) fail(card[i], "duplicate parameter '" + card[i].text + "'");
            out[key] = number(card[i + 2]);
            i += 3;
        }
        return out;
    }

    Body& scope(Circuit& c) { return open_ ? open_->body : c.top; }

    void claim_name(const Token& t) {
        auto& names = open_ ? sub_names_ : top_names_;
        if (!names.insert(t.text).second) fail(t, "duplicate name '" + t.text + "'");
    }

    static void arity(const Card& card, bool ok, const std::string& expect) {
        if (!ok) fail(card[0], card[0].text + ": arity mismatch, expected " + expect);
    }

    void statement(Circuit& c, const Card& card) {
        const Token& head = card[0];
        const std::string key = lower(head.text);
        if (key[0] == '.') {
            directive(c, card, key);
            return;
        }
        if (head.text.size() < 2) fail(head, "device name '" + head.text + "' is too short");
        switch (key[0]) {
            case 'r': two_terminal(c, card, DeviceKind::Resistor); break;
            case 'c': two_terminal(c, card, DeviceKind::Capacitor); break;
            case 'v': vsource(c, card); break;
            case 'y': memristor(c, card); break;
            case 'm': mosfet(c, card); break;
            case 'x': instance(c, card); break;
            default: fail(head, "unknown device prefix '" + head.text.substr(0, 1) + "'");
        }
    }

    void two_terminal(Circuit& c, const Card& card, DeviceKind kind) {
        const bool cap = kind == DeviceKind::Capacitor;
        arity(card, card.size() == 4 || (cap && card.size() == 7), cap ? "C<name> n+ n- <value> [ic=<v0>]" : "R<name> n+ n- <value>");
        Device d{kind, card[0].text, {card[1].text, card[2].text}, {}, {{"value", number(card[3])}}, {}};
        if (d.params["value"] <= 0) fail(card[3], "value must be positive");
        if (card.size() == 7) {
            auto kv = key_values(card, 4, {"ic"});
            d.params["ic"] = kv.at("ic");
        }
        claim_name(card[0]);
        scope(c).devices.push_back(std::move(d));
    }

    void vsource(Circuit& c, const Card& card) {
        arity(card, card.size() >= 4, "V<name> n+ n- DC <value> | PWL(t1 v1 ...)");
        Device d{DeviceKind::VSource, card[0].text, {card[1].text, card[2].text}, {}, {}, {}};
        const std::string kind = lower(card[3].text);
        if (kind == "dc") {
            arity(card, card.size() == 5, "V<name> n+ n- DC <value>");
            d.wave = SourceWave::constant(number(card[4]));
        } else if (kind == "pwl") {
            if (card.size() < 6 || card[4].text != "(" || card.back().text != ")")
                fail(card[3], "PWL expects a parenthesized list of time/value pairs");
            std::vector<PwlPoint> pts;
            const std::size_t n = card.size() - 6;
            if (n % 2 != 0 || n == 0) fail(card[3], "PWL expects an even, non-zero number of values");
            for (std::size_t i = 5; i + 1 < card.size() - 1; i += 2) {
                PwlPoint p{number(card[i]), number(card[i + 1])};
                if (!pts.empty() && p.t <= pts.back().t) fail(card[i], "PWL times must be strictly increasing");
                pts.push_back(p);
            }
            d.wave = SourceWave::pwl(std::move(pts));
        } else {
            arity(card, card.size() == 4, "V<name> n+ n- DC <value>");
            d.wave = SourceWave::constant(number(card[3]));
        }
        claim_name(card[0]);
        scope(c).devices.push_back(std::move(d));
    }

    void memristor(Circuit& c, const Card& card) {
        arity(card, card.size() >= 4, "Y<name> n+ n- <model> [x0=<val>] [polarity=1|-1]");
        Device d{DeviceKind::Memristor, card[0].text, {card[1].text, card[2].text}, card[3].text, {}, {}};
        d.params = key_values(card, 4, {"x0", "polarity"});
        if (auto x0 = d.param("x0"); x0 && (*x0 < 0 || *x0 > 1)) fail(card[0], "x0 must lie in [0, 1]");
        if (auto p = d.param("polarity"); p && *p != 1 && *p != -1) fail(card[0], "polarity must be 1 or -1");
        claim_name(card[0]);
        scope(c).devices.push_back(std::move(d));
    }

    void mosfet(Circuit& c, const Card& card) {
        arity(card, card.size() == 6, "M<name> nd ng ns nb <model>");
        claim_name(card[0]);
        scope(c).devices.push_back(make_mosfet(card[0].text, card[1].text, card[2].text, card[3].text,
                                               card[4].text, card[5].text));
    }

    void instance(Circuit& c, const Card& card) {
        arity(card, card.size() >= 2, "X<name> <ports...> <subckt>");
        Instance inst{card[0].text, card.back().text, {}};
        for (std::size_t i = 1; i + 1 < card.size(); ++i) inst.ports.push_back(card[i].text);
        claim_name(card[0]);
        scope(c).instances.push_back(std::move(inst));
    }

    void directive(Circuit& c, const Card& card, const std::string& key) {
        if (key == ".end") {
            done_ = true;
        } else if (key == ".model") {
            arity(card, card.size() >= 3, ".model <name> memristor|nmos|pmos <key>=<val> ...");
            ModelCard m{card[1].text, ModelKind::Memristor, {}};
            const std::string kind = lower(card[2].text);
            if (kind == "memristor") m.kind = ModelKind::Memristor;
            else if (kind == "nmos") m.kind = ModelKind::Nmos;
            else if (kind == "pmos") m.kind = ModelKind::Pmos;
            else fail(card[2], "unknown model kind '" + card[2].text + "'");
            m.params = key_values(card, 3, {});
            if (c.models.count(m.name)) fail(card[1], "duplicate model '" + m.name + "'");
            c.models.emplace(m.name, std::move(m));
        } else if (key == ".subckt") {
            if (open_) fail(card[0], "nested .subckt is not supported");
            arity(card, card.size() >= 2, ".subckt <name> <ports...>");
            if (c.subckts.count(card[1].text)) fail(card[1], "duplicate subcircuit '" + card[1].text + "'");
            open_ = Subckt{card[1].text, {}, {}};
            std::set<std::string> seen;
            for (std::size_t i = 2; i < card.size(); ++i) {
                if (!seen.insert(card[i].text).second) fail(card[i], "duplicate port '" + card[i].text + "'");
                open_->ports.push_back(card[i].text);
            }
            open_start_ = card[0];
            sub_names_.clear();
        } else if (key == ".ends") {
            if (!open_) fail(card[0], ".ends without .subckt");
            if (card.size() > 1 && card[1].text != open_->name)
                fail(card[1], ".ends name does not match '" + open_->name + "'");
            std::string name = open_->name;
            c.subckts.emplace(name, std::move(*open_));
            open_.reset();
        } else if (key == ".tran") {
            if (open_) fail(card[0], ".tran inside a subcircuit");
            arity(card, card.size() == 3, ".tran <tstep> <tstop>");
            Analysis a{number(card[1]), number(card[2])};
            if (!(a.tstep > 0 && a.tstep <= a.tstop)) fail(card[1], ".tran requires 0 < tstep <= tstop");
            c.analyses.push_back(a);
        } else {
            fail(card[0], "unknown directive '" + card[0].text + "'");
        }
    }
};

}  // namespace detail

inline Circuit parse(std::string_view text) { return detail::Parser{}.run(text); }

namespace detail {

inline void write_device(std::ostringstream& os, const Device& d) {
    os << d.name;
    for (const auto& t : d.terminals) os << ' ' << t;
    switch (d.kind) {
        case DeviceKind::Resistor:
            os << ' ' << format_number(d.params.at("value"));
            break;
        case DeviceKind::Capacitor:
            os << ' ' << format_number(d.params.at("value"));
            if (auto ic = d.param("ic")) os << " ic=" << format_number(*ic);
            break;
        case DeviceKind::VSource:
            if (d.wave.kind == SourceWave::Kind::Dc) {
                os << " DC " << format_number(d.wave.dc);
            } else {
                os << " PWL(";
                for (std::size_t i = 0; i < d.wave.points.size(); ++i) {
                    if (i) os << ' ';
                    os << format_number(d.wave.points[i].t) << ' ' << format_number(d.wave.points[i].v);
                }
                os << ')';
            }
            break;
        case DeviceKind::Memristor:
            os << ' ' << d.model;
            for (const auto& [k, v] : d.params) os << ' ' << k << '=' << format_number(v);
            break;
        case DeviceKind::Mosfet:
            os << ' ' << d.model;
            break;
    }
    os << '\n';
}

inline void write_body(std::ostringstream& os, const Body& b) {
    for (const auto& d : b.devices) write_device(os, d);
    for (const auto& x : b.instances) {
        os << x.name;
        for (const auto& p : x.ports) os << ' ' << p;
        os << ' ' << x.subckt << '\n';
    }
}

}  // namespace detail

/// Renders a circuit in the netlist grammar; parse(serialize(c)) == c.
inline std::string serialize(const Circuit& c) {
    std::ostringstream os;
    os << c.title << '\n';
    for (const auto& [name, m] : c.models) {
        os << ".model " << name << ' ' << detail::model_kind_name(m.kind);
        for (const auto& [k, v] : m.params) os << ' ' << k << '=' << detail::format_number(v);
        os << '\n';
    }
    for (const auto& [name, s] : c.subckts) {
        os << ".subckt " << name;
        for (const auto& p : s.ports) os << ' ' << p;
        os << '\n';
        detail::write_body(os, s.body);
        os << ".ends " << name << '\n';
    }
    detail::write_body(os, c.top);
    for (const auto& a : c.analyses)
        os << ".tran " << detail::format_number(a.tstep) << ' ' << detail::format_number(a.tstop) << '\n';
    os << ".end\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Flattened circuit

struct FlatResistor {
    double resistance = 0;
};
struct FlatCapacitor {
    double capacitance = 0;
    double ic = 0;
};
struct FlatSource {
    SourceWave wave;
};
struct FlatMemristor {
    MemristorParams params;
    int polarity = 1;
    std::optional<double> x0;
};
struct FlatMosfet {
    MosfetParams params;
};

using FlatModel = std::variant<FlatResistor, FlatCapacitor, FlatSource, FlatMemristor, FlatMosfet>;

struct FlatDevice {
    DeviceKind kind = DeviceKind::Resistor;
    std::string name;
    std::vector<std::size_t> nodes;  // indices into FlatCircuit::nets
    FlatModel model;
};

inline constexpr std::size_t kGround = 0;

struct FlatCircuit {
    std::vector<std::string> nets{"0"};  // nets[0] is ground
    std::vector<FlatDevice> devices;
    std::optional<Analysis> tran;

    [[nodiscard]] std::optional<std::size_t> net_index(std::string_view name) const {
        if (detail::is_ground(name)) return kGround;
        for (std::size_t i = 0; i < nets.size(); ++i)
            if (nets[i] == name) return i;
        return std::nullopt;
    }

    [[nodiscard]] std::optional<std::size_t> device_index(std::string_view name) const {
        for (std::size_t i = 0; i < devices.size(); ++i)
            if (devices[i].name == name) return i;
        return std::nullopt;
    }
};

inline MemristorParams memristor_params(const ModelCard& m) {
    MemristorParams p;
    for (const auto& [key, v] : m.params) {
        if (key == "r_on") p.r_on = v;
        else if (key == "r_off") p.r_off = v;
        else if (key == "l_disc") p.l_disc = v;
        else if (key == "l_taox") p.l_taox = v;
        else if (key == "area") p.area = v;
        else if (key == "n_min") p.n_min = v;
        else if (key == "n_max") p.n_max = v;
        else if (key == "z_v0") p.z_v0 = v;
        else if (key == "c31") p.c31 = v;
        else if (key == "v_char") p.v_char = v;
        else if (key == "p" || key == "window_exponent") p.window_exponent = v;
        else if (key == "state_map") p.state_map = v == 0 ? StateMap::ConductanceLinear : StateMap::ResistanceLinear;
        else throw NetlistError("model '" + m.name + "': unknown memristor parameter '" + key + "'");
    }
    if (!p.valid()) throw NetlistError("model '" + m.name + "': invalid memristor parameters");
    return p;
}

inline MosfetParams mosfet_params(const ModelCard& m) {
    MosfetParams p;
    p.polarity = m.kind == ModelKind::Pmos ? Polarity::P : Polarity::N;
    for (const auto& [key, v] : m.params) {
        if (key == "vth" || key == "v_th") p.v_th = v;
        else if (key == "r_on" || key == "r_ds_on") p.r_ds_on = v;
        else if (key == "r_off" || key == "r_ds_off") p.r_ds_off = v;
        else throw NetlistError("model '" + m.name + "': unknown mosfet parameter '" + key + "'");
    }
    if (!p.valid()) throw NetlistError("model '" + m.name + "': invalid mosfet parameters");
    return p;
}

namespace detail {

class Expander {
public:
    explicit Expander(const Circuit& c) : c_(c) {}

    FlatCircuit run() {
        if (c_.analyses.size() > 1) throw NetlistError("more than one .tran analysis");
        if (!c_.analyses.empty()) flat_.tran = c_.analyses.front();
        scope(c_.top, "", {});
        return std::move(flat_);
    }

private:
    const Circuit& c_;
    FlatCircuit flat_;
    std::unordered_map<std::string, std::size_t> net_ids_{{"0", kGround}};
    std::vector<std::string> stack_;

    std::size_t net(const std::string& local, const std::string& prefix,
                    const std::map<std::string, std::string>& bindings) {
        if (is_ground(local)) return kGround;
        std::string full;
        if (auto it = bindings.find(local); it != bindings.end()) full = it->second;
        else full = prefix + local;
        if (is_ground(full)) return kGround;
        auto [it, inserted] = net_ids_.emplace(full, flat_.nets.size());
        if (inserted) flat_.nets.push_back(full);
        return it->second;
    }

    const ModelCard& model(const Device& d, const std::string& path) const {
        auto it = c_.models.find(d.model);
        if (it == c_.models.end()) throw NetlistError(path + ": undefined model '" + d.model + "'");
        return it->second;
    }

    void scope(const Body& body, const std::string& prefix, const std::map<std::string, std::string>& bindings) {
        for (const auto& d : body.devices) {
            FlatDevice f;
            f.kind = d.kind;
            f.name = prefix + d.name;
            for (const auto& t : d.terminals) f.nodes.push_back(net(t, prefix, bindings));
            switch (d.kind) {
                case DeviceKind::Resistor: f.model = FlatResistor{d.params.at("value")}; break;
                case DeviceKind::Capacitor: f.model = FlatCapacitor{d.params.at("value"), d.param("ic").value_or(0.0)}; break;
                case DeviceKind::VSource: f.model = FlatSource{d.wave}; break;
                case DeviceKind::Memristor: {
                    const auto& m = model(d, f.name);
                    if (m.kind != ModelKind::Memristor) throw NetlistError(f.name + ": model '" + d.model + "' is not a memristor model");
                    f.model = FlatMemristor{memristor_params(m), static_cast<int>(d.param("polarity").value_or(1)), d.initial_state()};
                    break;
                }
                case DeviceKind::Mosfet: {
                    const auto& m = model(d, f.name);
                    if (m.kind == ModelKind::Memristor) throw NetlistError(f.name + ": model '" + d.model + "' is not a mosfet model");
                    f.model = FlatMosfet{mosfet_params(m)};
                    break;
                }
            }
            flat_.devices.push_back(std::move(f));
        }
        for (const auto& x : body.instances) {
            const std::string path = prefix + x.name;
            auto it = c_.subckts.find(x.subckt);
            if (it == c_.subckts.end()) throw NetlistError(path + ": undefined subcircuit '" + x.subckt + "'");
            const Subckt& sub = it->second;
            if (std::find(stack_.begin(), stack_.end(), sub.name) != stack_.end())
                throw NetlistError(path + ": recursive instantiation of subcircuit '" + sub.name + "'");
            if (sub.ports.size() != x.ports.size())
                throw NetlistError(path + ": port count mismatch, '" + sub.name + "' has " +
                                   std::to_string(sub.ports.size()) + " ports, instance binds " +
                                   std::to_string(x.ports.size()));
            std::map<std::string, std::string> inner;
            for (std::size_t i = 0; i < sub.ports.size(); ++i) {
                const std::size_t id = net(x.ports[i], prefix, bindings);
                inner[sub.ports[i]] = flat_.nets[id];
            }
            stack_.push_back(sub.name);
            scope(sub.body, path + ".", inner);
            stack_.pop_back();
        }
    }
};

}  // namespace detail

/// Inlines every subcircuit instance. Device and net names inside an
/// instance get a dot-separated instance path prefix; nets are numbered in
/// order of first reference.
inline FlatCircuit expand(const Circuit& c) { return detail::Expander(c).run(); }

// ---------------------------------------------------------------------------
// Structural checks

enum class Severity { Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Warning;
    std::string code;
    std::string message;
    std::vector<std::string> subjects;
};

[[nodiscard]] inline bool has_errors(const std::vector<Diagnostic>& ds) {
    return std::any_of(ds.begin(), ds.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

namespace detail {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

/// Nets that cannot reach ground through conducting branches. Capacitors
/// count as conducting only when `caps_conduct` is set.
inline std::vector<std::size_t> unreachable_nets(const FlatCircuit& f, bool caps_conduct) {
    UnionFind uf(f.nets.size());
    for (const auto& d : f.devices) {
        switch (d.kind) {
            case DeviceKind::Capacitor:
                if (!caps_conduct) break;
                [[fallthrough]];
            case DeviceKind::Resistor:
            case DeviceKind::VSource:
            case DeviceKind::Memristor: uf.unite(d.nodes[0], d.nodes[1]); break;
            case DeviceKind::Mosfet: uf.unite(d.nodes[0], d.nodes[2]); break;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < f.nets.size(); ++i)
        if (uf.find(i) != uf.find(kGround)) out.push_back(i);
    return out;
}

}  // namespace detail

/// Floating nets, nets without a DC path to ground and uninitialized
/// memristors are warnings; malformed structure is an error.
inline std::vector<Diagnostic> validate(const FlatCircuit& f) {
    std::vector<Diagnostic> out;
    if (f.nets.empty() || f.nets[0] != "0") {
        out.push_back({Severity::Error, "no-ground", "circuit has no ground net", {}});
        return out;
    }
    static constexpr auto arity = [](DeviceKind k) { return k == DeviceKind::Mosfet ? 4u : 2u; };
    bool bounds_ok = true;
    for (const auto& d : f.devices) {
        if (d.nodes.size() != arity(d.kind)) {
            out.push_back({Severity::Error, "arity", d.name + ": wrong terminal count", {d.name}});
            bounds_ok = false;
        }
        for (auto n : d.nodes)
            if (n >= f.nets.size()) {
                out.push_back({Severity::Error, "terminal-range", d.name + ": terminal references net #" + std::to_string(n), {d.name}});
                bounds_ok = false;
            }
    }
    if (!bounds_ok) return out;

    std::vector<int> touches(f.nets.size(), 0);
    std::vector<bool> driven(f.nets.size(), false);
    for (const auto& d : f.devices) {
        for (auto n : d.nodes) ++touches[n];
        if (d.kind == DeviceKind::VSource)
            for (auto n : d.nodes) driven[n] = true;
    }
    for (std::size_t i = 1; i < f.nets.size(); ++i)
        if (touches[i] == 1 && !driven[i])
            out.push_back({Severity::Warning, "floating-net", "net '" + f.nets[i] + "' has a single connection", {f.nets[i]}});
    for (auto i : detail::unreachable_nets(f, false))
        out.push_back({Severity::Warning, "no-dc-path", "net '" + f.nets[i] + "' has no DC path to ground", {f.nets[i]}});
    for (const auto& d : f.devices)
        if (const auto* m = std::get_if<FlatMemristor>(&d.model); m && !m->x0)
            out.push_back({Severity::Warning, "default-state", d.name + ": no x0 given, using 0.5", {d.name}});
    return out;
}

}  // namespace mrlsim
