#pragma once

#include "hbp/channel.hpp"
#include "hbp/errors.hpp"
#include "hbp/units.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hbp {

enum class SweepAxis { Frequency, Load, Inductance, InputVoltage };

struct AxisInfo {
    std::string_view name;
    std::string_view unit;
};

[[nodiscard]] inline AxisInfo axis_info(SweepAxis a) noexcept {
    switch (a) {
    case SweepAxis::Frequency: return {"frequency", "Hz"};
    case SweepAxis::Load: return {"load", "ohm"};
    case SweepAxis::Inductance: return {"inductance", "H"};
    case SweepAxis::InputVoltage: return {"input_voltage", "V"};
    }
    return {"frequency", "Hz"};
}

[[nodiscard]] inline std::optional<SweepAxis> parse_axis(std::string_view name) noexcept {
    for (auto a : {SweepAxis::Frequency, SweepAxis::Load, SweepAxis::Inductance, SweepAxis::InputVoltage}) {
        if (axis_info(a).name == name) return a;
    }
    return std::nullopt;
}

struct SweepRow {
    double axis{0.0};
    std::optional<Complex> v_o;  ///< rms phasor; absent for power-only data
    double p_out_rms{0.0};
};

/// One sweep over a single axis. Rows are strictly increasing in `axis`.
struct SweepResult {
    SweepAxis axis{SweepAxis::Frequency};
    std::vector<SweepRow> rows;
    /// Continuous power model P(axis) the sweep was sampled from, when known.
    std::function<double(double)> model;

    [[nodiscard]] bool power_only() const {
        for (const auto& r : rows) {
            if (r.v_o) return false;
        }
        return true;
    }

    void validate() const {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!(rows[i].p_out_rms >= 0.0)) throw DomainError("sweep: negative power in row " + std::to_string(i));
            if (i > 0 && !(rows[i].axis > rows[i - 1].axis)) {
                throw DomainError("sweep: axis values must be strictly increasing");
            }
        }
    }
};

/// Fixed context for evaluating a receiver while one quantity is swept.
struct Scenario {
    channel::ReceiverParams rx;
    channel::SourceModel src;
    channel::BodyModel body;
    double frequency{0.0};  ///< operating frequency for non-frequency axes
};

/// Operating point with the swept quantity set to `x`.
[[nodiscard]] inline channel::OperatingPoint evaluate_at(const Scenario& s, SweepAxis axis, double x) {
    switch (axis) {
    case SweepAxis::Frequency:
        return channel::received_power(s.rx, s.src, s.body, x);
    case SweepAxis::Load: {
        auto rx = s.rx;
        rx.r_l = x;
        return channel::received_power(rx, s.src, s.body, s.frequency);
    }
    case SweepAxis::Inductance: {
        auto rx = s.rx;
        rx.l = x;
        return channel::received_power(rx, s.src, s.body, s.frequency);
    }
    case SweepAxis::InputVoltage:
        return channel::received_power(s.rx, s.src.with_v_in(x), s.body, s.frequency);
    }
    throw MisuseError("unknown sweep axis");
}

/// Closed-form sweep of `s` over `values` (strictly increasing).
[[nodiscard]] inline SweepResult simulate_sweep(const Scenario& s, SweepAxis axis, const std::vector<double>& values) {
    SweepResult out;
    out.axis = axis;
    out.rows.reserve(values.size());
    for (double x : values) {
        const auto op = evaluate_at(s, axis, x);
        out.rows.push_back({x, op.v_o, op.p_out_rms});
    }
    out.model = [s, axis](double x) { return evaluate_at(s, axis, x).p_out_rms; };
    out.validate();
    return out;
}

}  // namespace hbp
