#pragma once

// Closed-form lumped model of a resonant body-coupled power channel: the
// body is driven to a potential V_B, and a receiver with a series inductor
// picks up power through its contact electrode, returning current to earth
// through its floating-ground parasitics.

#include "hbp/errors.hpp"
#include "hbp/units.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace hbp::channel {

/// Receiver-side elements, SI units.
struct ReceiverParams {
    double c_ret{0.0};  ///< floating ground to earth (return path)
    double c_gb{0.0};   ///< floating ground to body
    double l{0.0};      ///< series inductor; 0 for a non-resonant receiver
    double r_l{0.0};    ///< load resistance
    double c_l{0.0};    ///< load shunt capacitance
    double r_s{0.0};    ///< series loss in the inductor branch

    void validate() const {
        auto fail = [](const char* what) { throw DomainError(std::string("ReceiverParams: ") + what); };
        if (!(c_ret > 0.0)) fail("C_ret must be > 0");
        if (!(c_gb >= 0.0)) fail("C_GB must be >= 0");
        if (!(l >= 0.0)) fail("L must be >= 0");
        if (r_l == 0.0) throw DegenerateLoadError("ReceiverParams: R_L = 0 shorts the load");
        if (!(r_l > 0.0)) fail("R_L must be > 0");
        if (!(c_l >= 0.0)) fail("C_L must be >= 0");
        if (!(r_s >= 0.0)) fail("r_s must be >= 0");
    }

    [[nodiscard]] double c_total() const noexcept { return c_ret + c_gb; }
    /// Ground-coupling ratio C_GB / C_ret.
    [[nodiscard]] double coupling_ratio() const noexcept { return c_gb / c_ret; }
};

struct BodyModel {
    double c_b{0.0};  ///< body to earth ground
    double r_b{0.0};  ///< tissue resistance between source contact and body node

    void validate() const {
        if (!(c_b > 0.0)) throw DomainError("BodyModel: C_B must be > 0");
        if (!(r_b >= 0.0)) throw DomainError("BodyModel: R_B must be >= 0");
    }
};

/// Earth-ground referenced transmitter driving the body through R_S.
struct GroundedTx {
    double v_in{0.0};
    double r_s{0.0};
};

/// Battery-powered transmitter whose return path is its own C_ret.
struct WearableTx {
    double v_in{0.0};
    double c_ret_tx{0.0};
};

/// Wearable transmitter with a resonant boost of its body potential by Q.
struct ResonantWearableTx {
    double v_in{0.0};
    double c_ret_tx{0.0};
    double q{1.0};
};

struct SourceModel {
    std::variant<GroundedTx, WearableTx, ResonantWearableTx> variant{GroundedTx{}};
    Amplitude convention{Amplitude::Rms};

    [[nodiscard]] double v_in() const {
        return std::visit([](const auto& s) { return s.v_in; }, variant);
    }

    [[nodiscard]] double v_in_rms() const { return to_rms(v_in(), convention); }

    /// Copy with a different input amplitude (same convention).
    [[nodiscard]] SourceModel with_v_in(double v) const {
        SourceModel out = *this;
        std::visit([v](auto& s) { s.v_in = v; }, out.variant);
        return out;
    }

    [[nodiscard]] bool is_grounded() const noexcept { return std::holds_alternative<GroundedTx>(variant); }

    void validate() const {
        if (!(v_in() > 0.0)) throw DomainError("SourceModel: V_in must be > 0");
        if (const auto* g = std::get_if<GroundedTx>(&variant)) {
            if (!(g->r_s >= 0.0)) throw DomainError("SourceModel: R_S must be >= 0");
        } else if (const auto* w = std::get_if<WearableTx>(&variant)) {
            if (!(w->c_ret_tx > 0.0)) throw DomainError("SourceModel: C_ret_tx must be > 0");
        } else if (const auto* r = std::get_if<ResonantWearableTx>(&variant)) {
            if (!(r->c_ret_tx > 0.0)) throw DomainError("SourceModel: C_ret_tx must be > 0");
            if (!(r->q >= 1.0)) throw DomainError("SourceModel: Q must be >= 1");
        }
    }
};

[[nodiscard]] inline SourceModel grounded(double v_in, Amplitude conv, double r_s = 0.0) {
    return {GroundedTx{v_in, r_s}, conv};
}
[[nodiscard]] inline SourceModel wearable(double v_in, Amplitude conv, double c_ret_tx) {
    return {WearableTx{v_in, c_ret_tx}, conv};
}
[[nodiscard]] inline SourceModel resonant_wearable(double v_in, Amplitude conv, double c_ret_tx, double q) {
    return {ResonantWearableTx{v_in, c_ret_tx, q}, conv};
}

struct OperatingPoint {
    double frequency{0.0};
    Complex v_b{};  ///< rms phasor
    Complex v_o{};  ///< rms phasor
    double p_out_rms{0.0};
};

/// Body potential (rms) produced by `src`. The grounded closed form ignores
/// the drop across R_S and R_B.
[[nodiscard]] inline double body_potential(const SourceModel& src, const BodyModel& body, double f_hz) {
    require_positive_frequency(f_hz);
    src.validate();
    body.validate();
    const double v = src.v_in_rms();
    if (std::holds_alternative<GroundedTx>(src.variant)) return v;
    if (const auto* w = std::get_if<WearableTx>(&src.variant)) {
        return v * w->c_ret_tx / (body.c_b + w->c_ret_tx);
    }
    const auto& r = std::get<ResonantWearableTx>(src.variant);
    return v * r.q * r.c_ret_tx / body.c_b;
}

/// Z_Load = R_L || C_L.
[[nodiscard]] inline Complex load_impedance(const ReceiverParams& rx, double w) {
    return rx.r_l / Complex(1.0, w * rx.c_l * rx.r_l);
}

/// V_o / V_B for the receiver, with V_o measured across the load.
///
/// H = Z_Load / [ (r_s + jwL + Z_Load)(1 + C_GB/C_ret) + 1/(jw C_ret) ]
[[nodiscard]] inline Complex transfer_function(const ReceiverParams& rx, double f_hz) {
    require_positive_frequency(f_hz);
    rx.validate();
    const double w = angular(f_hz);
    const Complex z_load = load_impedance(rx, w);
    const Complex series = Complex(rx.r_s, w * rx.l) + z_load;
    const Complex z_ret = 1.0 / Complex(0.0, w * rx.c_ret);
    return z_load / (series * (1.0 + rx.coupling_ratio()) + z_ret);
}

/// |V_o| (rms) of a receiver without inductor. `simplified` uses the
/// R_L-only divider; otherwise R_L || Z_CL || Z_GB against Z_ret.
[[nodiscard]] inline double no_inductor_voltage(const ReceiverParams& rx, double v_b_rms, double f_hz,
                                                bool simplified) {
    require_positive_frequency(f_hz);
    if (rx.l != 0.0) throw MisuseError("no_inductor_voltage: receiver has L > 0; use transfer_function");
    rx.validate();
    const double w = angular(f_hz);
    const Complex z_ret = 1.0 / Complex(0.0, w * rx.c_ret);
    Complex z_par{rx.r_l, 0.0};
    if (!simplified) {
        Complex y = 1.0 / rx.r_l;
        y += Complex(0.0, w * rx.c_l);
        y += Complex(0.0, w * rx.c_gb);
        z_par = 1.0 / y;
    }
    return v_b_rms * std::abs(z_par / (z_ret + z_par));
}

/// Resonant frequency in hertz, 1 / (2 pi sqrt(L (C_ret + C_GB))).
[[nodiscard]] inline double resonant_frequency(const ReceiverParams& rx) {
    if (!(rx.l > 0.0)) throw NonResonantError("resonant_frequency: receiver has no inductor (L = 0)");
    if (!(rx.c_total() > 0.0)) throw DomainError("resonant_frequency: C_ret + C_GB must be > 0");
    return 1.0 / (kTwoPi * std::sqrt(rx.l * rx.c_total()));
}

/// |V_o / V_B| at resonance for the lossless receiver: C_ret / (C_ret + C_GB).
[[nodiscard]] inline double resonant_gain(const ReceiverParams& rx) {
    if (!(rx.c_ret > 0.0)) throw DomainError("resonant_gain: C_ret must be > 0");
    return rx.c_ret / (rx.c_ret + rx.c_gb);
}

[[nodiscard]] inline OperatingPoint received_power(const ReceiverParams& rx, const SourceModel& src,
                                                   const BodyModel& body, double f_hz) {
    OperatingPoint op;
    op.frequency = f_hz;
    op.v_b = body_potential(src, body, f_hz);
    op.v_o = op.v_b * transfer_function(rx, f_hz);
    op.p_out_rms = std::norm(op.v_o) / rx.r_l;
    return op;
}

struct SymbolEntry {
    std::string_view symbol;
    std::string_view owner;  ///< "Type.field", or empty when not housed
    bool out_of_scope{false};
};

/// Where each model symbol lives in the type system.
[[nodiscard]] inline const auto& element_symbols() {
    static constexpr std::array<SymbolEntry, 15> table{{
        {"V_IN", "SourceModel.v_in", false},
        {"V_B", "OperatingPoint.v_b", false},
        {"V_o", "OperatingPoint.v_o", false},
        {"R_S", "SourceModel.GroundedTx.r_s", false},
        {"R_B", "BodyModel.r_b", false},
        {"C_B", "BodyModel.c_b", false},
        {"C_ret", "ReceiverParams.c_ret", false},
        {"C_GB", "ReceiverParams.c_gb", false},
        {"L", "ReceiverParams.l", false},
        {"R_L", "ReceiverParams.r_l", false},
        {"C_L", "ReceiverParams.c_l", false},
        {"omega_0", "resonant_frequency()", false},
        {"P_out", "OperatingPoint.p_out_rms", false},
        {"Q", "SourceModel.ResonantWearableTx.q", false},
        {"C_ret-Tx", "SourceModel.WearableTx.c_ret_tx", false},
    }};
    return table;
}

/// Symbols the lumped model deliberately does not compute.
[[nodiscard]] inline bool is_out_of_scope_symbol(std::string_view s) {
    static constexpr std::array<std::string_view, 6> excluded{"SAR", "E", "H", "E_induced", "J_induced", "B"};
    for (auto x : excluded) {
        if (x == s) return true;
    }
    return false;
}

[[nodiscard]] inline std::optional<SymbolEntry> lookup_symbol(std::string_view s) {
    for (const auto& e : element_symbols()) {
        if (e.symbol == s) return e;
    }
    if (s == "omega0" || s == "ω₀") return element_symbols()[11];
    if (is_out_of_scope_symbol(s)) return SymbolEntry{s, "", true};
    return std::nullopt;
}

}  // namespace hbp::channel
