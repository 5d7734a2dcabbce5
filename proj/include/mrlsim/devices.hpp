#pragma once

// Behavioral device models: the Pt/TaOx/Ta memristor and a switch-level MOSFET.
//
// Memristor state is the oxygen-vacancy concentration N of the disc region,
// stored normalized as x = (N - N_min) / (N_max - N_min) in [0, 1]. x = 1 is
// the low-resistance state (logic 1), x = 0 the high-resistance state.

#include <cmath>
#include <stdexcept>
#include <string>

namespace mrlsim {

inline constexpr double kElementaryCharge = 1.602176634e-19;  // C

/// How the normalized state maps onto resistance between the two endpoints.
enum class StateMap {
    ConductanceLinear,  // G(x) = x / r_on + (1 - x) / r_off
    ResistanceLinear,   // R(x) = x * r_on + (1 - x) * r_off
};

struct MemristorParams {
    double r_on = 1e3;             // Ohm
    double r_off = 1e6;            // Ohm
    double l_disc = 4e-9;          // m
    double l_taox = 11e-9;         // m, disc + plug
    double area = 3.14e4 * 1e-18;  // m^2
    double n_min = 4e25;           // m^-3
    double n_max = 2e27;           // m^-3
    double z_v0 = 2.0;             // oxygen vacancy charge number
    double c31 = 6e-12;            // A*m/V
    double v_char = 0.25;          // V
    double window_exponent = 1.0;
    StateMap state_map = StateMap::ConductanceLinear;

    [[nodiscard]] double plug_length() const { return l_taox - l_disc; }

    [[nodiscard]] bool valid() const {
        return r_on > 0 && r_off > r_on && n_min >= 0 && n_max > n_min && l_disc > 0 &&
               l_taox > l_disc && area > 0 && z_v0 > 0 && c31 > 0 && v_char > 0 &&
               window_exponent > 0;
    }

    void validate() const {
        if (!valid()) throw std::invalid_argument("invalid memristor parameters");
    }
};

struct MemristorState {
    double x = 0.5;
};

[[nodiscard]] inline double memristor_conductance(MemristorState s, const MemristorParams& p) {
    if (p.state_map == StateMap::ResistanceLinear) return 1.0 / (s.x * p.r_on + (1.0 - s.x) * p.r_off);
    return s.x / p.r_on + (1.0 - s.x) / p.r_off;
}

[[nodiscard]] inline double memristance(MemristorState s, const MemristorParams& p) {
    if (p.state_map == StateMap::ResistanceLinear) return s.x * p.r_on + (1.0 - s.x) * p.r_off;
    return 1.0 / memristor_conductance(s, p);
}

/// Ionic current driving vacancy migration. Positive voltage on the bar
/// (plus) terminal gives a negative ionic current, which raises N.
[[nodiscard]] inline double ionic_current(double v, const MemristorParams& p) {
    return -(p.c31 / p.l_disc) * std::sinh(v / p.v_char);
}

/// Drift window: 1 - x^(2p) while x rises, 1 - (1 - x)^(2p) while it falls.
[[nodiscard]] inline double drift_window(double x, double direction, const MemristorParams& p) {
    const double q = 2.0 * p.window_exponent;
    return direction >= 0 ? 1.0 - std::pow(x, q) : 1.0 - std::pow(1.0 - x, q);
}

/// dx/dt for branch voltage v = V(plus) - V(minus).
[[nodiscard]] inline double state_derivative(MemristorState s, double v, const MemristorParams& p) {
    const double dn_dt = -ionic_current(v, p) / (kElementaryCharge * p.z_v0 * p.area * p.l_disc);
    const double dx_dt = dn_dt / (p.n_max - p.n_min);
    if (dx_dt == 0.0) return 0.0;
    return dx_dt * drift_window(s.x, dx_dt, p);
}

[[nodiscard]] inline double memristor_current(MemristorState s, double v, const MemristorParams& p) {
    return v * memristor_conductance(s, p);
}

// ---------------------------------------------------------------------------
// Switch-level MOSFET

enum class Polarity { N, P };

struct MosfetParams {
    Polarity polarity = Polarity::N;
    double v_th = 0.5;      // V
    double r_ds_on = 100;   // Ohm
    double r_ds_off = 1e9;  // Ohm

    [[nodiscard]] bool valid() const { return v_th > 0 && r_ds_on > 0 && r_ds_off >= 1000 * r_ds_on; }

    void validate() const {
        if (!valid()) throw std::invalid_argument("invalid mosfet parameters");
    }
};

[[nodiscard]] inline bool mosfet_on(double v_gs, const MosfetParams& p) {
    return p.polarity == Polarity::N ? v_gs > p.v_th : v_gs < -p.v_th;
}

/// Drain-source conductance. v_ds is unused by the switch-level model.
[[nodiscard]] inline double mosfet_conductance(double v_gs, [[maybe_unused]] double v_ds,
                                               const MosfetParams& p) {
    return mosfet_on(v_gs, p) ? 1.0 / p.r_ds_on : 1.0 / p.r_ds_off;
}

}  // namespace mrlsim
