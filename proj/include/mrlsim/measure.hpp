#pragma once

// Waveform measurements: logic digitization with 30 %/70 % thresholds,
// slew, 50 % propagation delay, supply energy, the alpha*C*f*Vdd^2
// dynamic-power estimate, and CSV / VCD export.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mrlsim/engine.hpp"

namespace mrlsim {

class MeasurementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Level : std::uint8_t { Low, High, X };

[[nodiscard]] inline char level_char(Level l) {
    switch (l) {
        case Level::Low: return '0';
        case Level::High: return '1';
        case Level::X: return 'x';
    }
    return 'x';
}

struct LogicThresholds {
    double vdd = 1.0;
    [[nodiscard]] double low() const { return 0.3 * vdd; }
    [[nodiscard]] double high() const { return 0.7 * vdd; }
    [[nodiscard]] Level classify(double v) const {
        if (v >= high()) return Level::High;
        if (v <= low()) return Level::Low;
        return Level::X;
    }
};

struct LogicEvent {
    double time = 0;
    Level level = Level::X;
    bool operator==(const LogicEvent&) const = default;
};

/// Per-signal level changes. The first event of each signal sits at the
/// first sample time.
struct DigitalTrace {
    LogicThresholds thresholds;
    std::vector<std::string> signals;
    std::vector<std::vector<LogicEvent>> events;

    [[nodiscard]] const std::vector<LogicEvent>& of(std::string_view signal) const {
        for (std::size_t i = 0; i < signals.size(); ++i)
            if (signals[i] == signal) return events[i];
        throw MeasurementError("unknown signal '" + std::string(signal) + "'");
    }

    /// Level in force at time t (the last event at or before t).
    [[nodiscard]] Level level_at(std::string_view signal, double t) const {
        const auto& ev = of(signal);
        Level l = ev.empty() ? Level::X : ev.front().level;
        for (const auto& e : ev) {
            if (e.time > t) break;
            l = e.level;
        }
        return l;
    }

    bool operator==(const DigitalTrace&) const = default;
};

namespace detail {

inline double crossing_time(double t0, double v0, double t1, double v1, double level) {
    if (v1 == v0) return t1;
    return t0 + (level - v0) * (t1 - t0) / (v1 - v0);
}

inline std::span<const double> signal(const Waveform& w, std::string_view name) {
    if (!w.has_net(name)) throw MeasurementError("unknown signal '" + std::string(name) + "'");
    return w.voltage(name);
}

}  // namespace detail

/// Thresholds each signal; level changes are timed at the interpolated
/// threshold crossing, and consecutive identical levels merge.
[[nodiscard]] inline DigitalTrace digitize(const Waveform& w, const std::vector<std::string>& signals, double vdd) {
    if (!(vdd > 0)) throw std::invalid_argument("vdd must be positive");
    DigitalTrace tr;
    tr.thresholds.vdd = vdd;
    const auto& th = tr.thresholds;
    for (const auto& name : signals) {
        auto v = detail::signal(w, name);
        std::vector<LogicEvent> ev;
        for (std::size_t k = 0; k < v.size(); ++k) {
            const Level l = th.classify(v[k]);
            if (ev.empty()) {
                ev.push_back({w.time[k], l});
                continue;
            }
            if (l == ev.back().level) continue;
            const Level from = ev.back().level;
            double t = w.time[k];
            // Each crossed threshold becomes its own event.
            const bool rising = v[k] > v[k - 1];
            const double first = rising ? th.low() : th.high();
            const double second = rising ? th.high() : th.low();
            const Level mid = Level::X;
            if (from != mid && l != mid) {
                ev.push_back({detail::crossing_time(w.time[k - 1], v[k - 1], w.time[k], v[k], first), mid});
                t = detail::crossing_time(w.time[k - 1], v[k - 1], w.time[k], v[k], second);
            } else if (l == mid) {
                t = detail::crossing_time(w.time[k - 1], v[k - 1], w.time[k], v[k], first);
            } else {
                t = detail::crossing_time(w.time[k - 1], v[k - 1], w.time[k], v[k], second);
            }
            ev.push_back({t, l});
        }
        tr.signals.push_back(name);
        tr.events.push_back(std::move(ev));
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Slew and delay

struct Edge {
    bool rising = true;
    double t_low = 0;   // 30 % crossing
    double t_high = 0;  // 70 % crossing
    [[nodiscard]] double slew() const { return rising ? t_high - t_low : t_low - t_high; }
};

/// Complete transitions through both thresholds, in time order.
[[nodiscard]] inline std::vector<Edge> edges(const Waveform& w, std::string_view name, double vdd) {
    auto v = detail::signal(w, name);
    const LogicThresholds th{vdd};
    std::vector<Edge> out;
    // Last crossing out of the low (high) band, pending completion.
    std::optional<double> left_low, left_high;
    for (std::size_t k = 1; k < v.size(); ++k) {
        const double a = v[k - 1], b = v[k];
        const double t0 = w.time[k - 1], t1 = w.time[k];
        if (b > a) {
            if (a <= th.low() && b > th.low()) left_low = detail::crossing_time(t0, a, t1, b, th.low());
            if (a < th.high() && b >= th.high()) {
                if (left_low) out.push_back({true, *left_low, detail::crossing_time(t0, a, t1, b, th.high())});
                left_low.reset();
                left_high.reset();
            }
        } else if (b < a) {
            if (a >= th.high() && b < th.high()) left_high = detail::crossing_time(t0, a, t1, b, th.high());
            if (a > th.low() && b <= th.low()) {
                if (left_high) out.push_back({false, detail::crossing_time(t0, a, t1, b, th.low()), *left_high});
                left_high.reset();
                left_low.reset();
            }
        }
    }
    return out;
}

/// 30-70 % rise time or 70-30 % fall time of the edge_index-th complete edge.
[[nodiscard]] inline double slew_time(const Waveform& w, std::string_view name, std::size_t edge_index, double vdd) {
    auto e = edges(w, name, vdd);
    if (edge_index >= e.size())
        throw MeasurementError("signal '" + std::string(name) + "' has no edge #" + std::to_string(edge_index) +
                               " crossing both thresholds");
    return e[edge_index].slew();
}

/// Interpolated 50 % crossings.
[[nodiscard]] inline std::vector<double> mid_crossings(const Waveform& w, std::string_view name, double vdd) {
    auto v = detail::signal(w, name);
    const double mid = 0.5 * vdd;
    std::vector<double> out;
    for (std::size_t k = 1; k < v.size(); ++k) {
        const double a = v[k - 1] - mid, b = v[k] - mid;
        if ((a < 0 && b >= 0) || (a > 0 && b <= 0))
            out.push_back(detail::crossing_time(w.time[k - 1], v[k - 1], w.time[k], v[k], mid));
    }
    return out;
}

struct DelayMeasurement {
    double t_in = 0;
    double t_out = 0;
    double delay = 0;
    bool causal = true;  // false when the output crossing precedes every input crossing
};

/// Pairs every 50 % output crossing with the latest input crossing at or
/// before it. Output crossings that precede all input crossings pair with
/// the first input crossing and are flagged non-causal.
[[nodiscard]] inline std::vector<DelayMeasurement> propagation_delay(const Waveform& w, std::string_view in,
                                                                    std::string_view out, double vdd) {
    const auto ti = mid_crossings(w, in, vdd);
    const auto to = mid_crossings(w, out, vdd);
    std::vector<DelayMeasurement> res;
    for (double t : to) {
        auto it = std::upper_bound(ti.begin(), ti.end(), t);
        if (it != ti.begin()) {
            const double t_in = *(it - 1);
            res.push_back({t_in, t, t - t_in, true});
        } else if (!ti.empty()) {
            res.push_back({ti.front(), t, t - ti.front(), false});
        } else {
            throw MeasurementError("output transition at t=" + detail::format_number(t) + " on '" +
                                   std::string(out) + "' has no input transition to pair with");
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Energy and power

struct EnergyWindow {
    double t0 = 0;
    double t1 = 0;
};

struct SupplyEnergy {
    double energy = 0;         // J
    double average_power = 0;  // W
};

/// Trapezoid integral of v*i for one source over [t0, t1]; the power
/// samples are interpolated linearly at the window edges.
[[nodiscard]] inline SupplyEnergy supply_energy(const Waveform& w, std::string_view source, EnergyWindow win) {
    if (std::find(w.sources.begin(), w.sources.end(), source) == w.sources.end())
        throw MeasurementError("unknown source '" + std::string(source) + "'");
    if (w.time.empty() || !(win.t1 > win.t0) || win.t0 < w.time.front() || win.t1 > w.time.back() * (1 + 1e-12))
        throw MeasurementError("energy window outside the simulated interval");
    auto v = w.source_voltage(source);
    auto i = w.current(source);
    auto power = [&](std::size_t k) { return v[k] * i[k]; };
    auto power_at = [&](double t) {
        auto it = std::lower_bound(w.time.begin(), w.time.end(), t);
        if (it == w.time.end()) return power(w.time.size() - 1);
        const auto k = static_cast<std::size_t>(it - w.time.begin());
        if (*it == t || k == 0) return power(k);
        const double a = (t - w.time[k - 1]) / (w.time[k] - w.time[k - 1]);
        return power(k - 1) + a * (power(k) - power(k - 1));
    };
    double e = 0;
    double t_prev = win.t0, p_prev = power_at(win.t0);
    for (std::size_t k = 0; k < w.time.size(); ++k) {
        if (w.time[k] <= win.t0) continue;
        if (w.time[k] >= win.t1) break;
        e += 0.5 * (p_prev + power(k)) * (w.time[k] - t_prev);
        t_prev = w.time[k];
        p_prev = power(k);
    }
    e += 0.5 * (p_prev + power_at(win.t1)) * (win.t1 - t_prev);
    return {e, e / (win.t1 - win.t0)};
}

struct SupplyReport {
    std::map<std::string, SupplyEnergy> per_source;
    SupplyEnergy total;
};

[[nodiscard]] inline SupplyReport supply_energy(const Waveform& w, const std::vector<std::string>& sources,
                                                EnergyWindow win) {
    SupplyReport r;
    for (const auto& s : sources) {
        auto e = supply_energy(w, s, win);
        r.per_source[s] = e;
        r.total.energy += e.energy;
    }
    r.total.average_power = r.total.energy / (win.t1 - win.t0);
    return r;
}

struct PowerEstimate {
    double alpha = 0;
    double c = 0;
    double f = 0;
    double vdd = 0;
    double p_dyn = 0;
};

[[nodiscard]] inline PowerEstimate dynamic_power(double alpha, double c, double f, double vdd) {
    if (alpha < 0 || c < 0 || f < 0 || vdd < 0) throw std::invalid_argument("dynamic_power inputs must be non-negative");
    return {alpha, c, f, vdd, alpha * c * f * vdd * vdd};
}

// ---------------------------------------------------------------------------
// Export

namespace detail {

inline void write_full(std::ostream& os, double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, r.ptr - buf);
}

inline std::string vcd_id(std::size_t n) {
    std::string id;
    do {
        id.push_back(static_cast<char>('!' + n % 94));
        n /= 94;
    } while (n);
    return id;
}

inline void check_stream(const std::ostream& os) {
    if (!os) throw std::runtime_error("write failed");
}

}  // namespace detail

/// `time,<net...>` header, one row per sample. Ground is omitted. With an
/// empty selection every net is written.
inline void write_csv(std::ostream& os, const Waveform& w, const std::vector<std::string>& signals = {}) {
    std::vector<std::string> cols = signals;
    if (cols.empty())
        for (std::size_t n = 1; n < w.nets.size(); ++n) cols.push_back(w.nets[n]);
    std::vector<std::span<const double>> data;
    for (const auto& c : cols) data.push_back(detail::signal(w, c));
    os << "time";
    for (const auto& c : cols) os << ',' << c;
    os << '\n';
    for (std::size_t k = 0; k < w.size(); ++k) {
        detail::write_full(os, w.time[k]);
        for (const auto& d : data) {
            os << ',';
            detail::write_full(os, d[k]);
        }
        os << '\n';
    }
    detail::check_stream(os);
}

/// Levels as 0/1/x at every event time of any signal.
inline void write_csv(std::ostream& os, const DigitalTrace& tr) {
    std::vector<double> times;
    for (const auto& ev : tr.events)
        for (const auto& e : ev) times.push_back(e.time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    os << "time";
    for (const auto& s : tr.signals) os << ',' << s;
    os << '\n';
    for (double t : times) {
        detail::write_full(os, t);
        for (const auto& s : tr.signals) os << ',' << level_char(tr.level_at(s, t));
        os << '\n';
    }
    detail::check_stream(os);
}

/// Value change dump with a 1 ps timescale; X levels are written as `x`.
inline void write_vcd(std::ostream& os, const DigitalTrace& tr, std::string_view module = "top") {
    os << "$version mrlsim $end\n";
    os << "$timescale 1ps $end\n";
    os << "$scope module " << module << " $end\n";
    for (std::size_t i = 0; i < tr.signals.size(); ++i)
        os << "$var wire 1 " << detail::vcd_id(i) << ' ' << tr.signals[i] << " $end\n";
    os << "$upscope $end\n";
    os << "$enddefinitions $end\n";

    struct Change {
        std::int64_t ps;
        std::size_t signal;
        Level level;
    };
    std::vector<Change> changes;
    os << "#0\n$dumpvars\n";
    for (std::size_t i = 0; i < tr.signals.size(); ++i) {
        const auto& ev = tr.events[i];
        os << level_char(ev.empty() ? Level::X : ev.front().level) << detail::vcd_id(i) << '\n';
        for (std::size_t k = 1; k < ev.size(); ++k)
            changes.push_back({std::llround(ev[k].time / 1e-12), i, ev[k].level});
    }
    os << "$end\n";
    std::stable_sort(changes.begin(), changes.end(), [](const Change& a, const Change& b) { return a.ps < b.ps; });
    std::int64_t current = 0;
    for (const auto& c : changes) {
        if (c.ps != current) {
            os << '#' << c.ps << '\n';
            current = c.ps;
        }
        os << level_char(c.level) << detail::vcd_id(c.signal) << '\n';
    }
    detail::check_stream(os);
}

}  // namespace mrlsim
