#pragma once

// Receiver design optimisation: load and inductor selection, current-limited
// power, simultaneous multi-receiver powering and topology comparison.

#include "hbp/acnet.hpp"
#include "hbp/channel.hpp"
#include "hbp/channel_netlist.hpp"
#include "hbp/errors.hpp"
#include "hbp/golden.hpp"
#include "hbp/safety.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hbp::optimize {

enum class Constraint { None, LowerBound, UpperBound, LoadCurrent, ContactCurrent };

[[nodiscard]] inline std::string_view to_string(Constraint c) noexcept {
    switch (c) {
    case Constraint::None: return "none";
    case Constraint::LowerBound: return "lower-bound";
    case Constraint::UpperBound: return "upper-bound";
    case Constraint::LoadCurrent: return "load-current";
    case Constraint::ContactCurrent: return "contact-current";
    }
    return "none";
}

struct OptimizationResult {
    double argmax{0.0};
    double objective_at_argmax{0.0};  ///< W rms
    Constraint constraint_active{Constraint::None};
    std::vector<std::pair<double, double>> trace;
    /// Golden section saw a non-unimodal objective and a grid search was used.
    bool fallback_used{false};
    bool feasible{true};
    /// For infeasible problems: the smallest constraint violation found, as
    /// (current / limit) - 1, and the candidate achieving it.
    double min_violation{0.0};
};

struct LoadSearchOptions {
    double rel_tol{1e-3};
    /// Re-locate the |H| peak for every candidate load instead of holding f fixed.
    bool re_resonate{false};
};

namespace detail {

/// Frequency of peak received power near `f_guess`.
inline double peak_frequency_near(const channel::ReceiverParams& rx, const channel::SourceModel& src,
                                  const channel::BodyModel& body, double f_guess) {
    auto p = [&](double f) { return channel::received_power(rx, src, body, f).p_out_rms; };
    return golden_section_max(p, 0.8 * f_guess, 1.25 * f_guess, 1e-9, true).x;
}

inline double load_power(const channel::ReceiverParams& rx, const channel::SourceModel& src,
                         const channel::BodyModel& body, double f_hz, double r_l, bool re_resonate) {
    auto cand = rx;
    cand.r_l = r_l;
    const double f = re_resonate ? peak_frequency_near(cand, src, body, f_hz) : f_hz;
    return channel::received_power(cand, src, body, f).p_out_rms;
}

inline Constraint bound_state(double x, double lo, double hi, double rel_tol) {
    if (std::abs(x - lo) <= rel_tol * lo) return Constraint::LowerBound;
    if (std::abs(x - hi) <= rel_tol * hi) return Constraint::UpperBound;
    return Constraint::None;
}

}  // namespace detail

/// Load resistance in [lo, hi] maximising received power at `f_hz`.
[[nodiscard]] inline OptimizationResult optimal_load(const channel::ReceiverParams& rx, const channel::SourceModel& src,
                                                     const channel::BodyModel& body, double f_hz, double lo, double hi,
                                                     LoadSearchOptions opt = {}) {
    require_positive_frequency(f_hz);
    if (!(lo > 0.0) || !(hi > lo)) throw DomainError("optimal_load: bounds must satisfy 0 < lo < hi");
    if (!(rx.r_s > 0.0)) {
        throw UnboundedObjectiveError(
            "optimal_load: with r_s = 0 the resonant output voltage does not depend on R_L, so P = V_o^2 / R_L "
            "grows without bound as R_L -> 0; set a series loss r_s > 0");
    }
    auto objective = [&](double r) { return detail::load_power(rx, src, body, f_hz, r, opt.re_resonate); };

    OptimizationResult out;
    auto g = golden_section_max(objective, lo, hi, opt.rel_tol, true);
    out.trace = std::move(g.trace);
    if (!g.bracket_violated) {
        out.argmax = g.x;
        out.objective_at_argmax = g.fx;
    } else {
        out.fallback_used = true;
        const auto grid = logspace(lo, hi, 256);
        std::size_t best = 0;
        std::vector<double> vals(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            vals[i] = objective(grid[i]);
            out.trace.emplace_back(grid[i], vals[i]);
            if (vals[i] > vals[best]) best = i;
        }
        const double a = grid[best == 0 ? 0 : best - 1];
        const double b = grid[std::min(best + 1, grid.size() - 1)];
        auto local = golden_section_max(objective, a, b, opt.rel_tol, true);
        out.trace.insert(out.trace.end(), local.trace.begin(), local.trace.end());
        out.argmax = local.x;
        out.objective_at_argmax = local.fx;
    }
    out.constraint_active = detail::bound_state(out.argmax, lo, hi, opt.rel_tol);
    return out;
}

/// L that places the receiver's resonance at `f_target`.
[[nodiscard]] inline double optimal_inductor(const channel::ReceiverParams& rx, double f_target) {
    require_positive_frequency(f_target);
    if (!(rx.c_total() > 0.0)) throw DomainError("optimal_inductor: C_ret + C_GB must be > 0");
    const double w = angular(f_target);
    return 1.0 / (w * w * rx.c_total());
}

/// Maximises received power over R_L in [lo, hi] subject to load current
/// |V_o| / R_L <= i_limit and body contact current <= i_limit (both rms).
[[nodiscard]] inline OptimizationResult max_power_under_current_limit(const channel::ReceiverParams& rx,
                                                                      const channel::SourceModel& src,
                                                                      const channel::BodyModel& body, double f_hz,
                                                                      double i_limit, double lo, double hi,
                                                                      LoadSearchOptions opt = {}) {
    require_positive_frequency(f_hz);
    if (!(i_limit > 0.0)) throw DomainError("max_power_under_current_limit: I_limit must be > 0");
    if (!(lo > 0.0) || !(hi > lo)) throw DomainError("max_power_under_current_limit: bounds must satisfy 0 < lo < hi");

    auto power = [&](double r) { return detail::load_power(rx, src, body, f_hz, r, false); };
    auto load_current = [&](double r) {
        auto cand = rx;
        cand.r_l = r;
        return std::abs(channel::received_power(cand, src, body, f_hz).v_o) / r;
    };

    OptimizationResult out;
    const double i_contact = safety::contact_current(src, body, f_hz);
    if (i_contact > i_limit) {
        // The contact current does not depend on the load: nothing is feasible.
        out.feasible = false;
        out.constraint_active = Constraint::ContactCurrent;
        out.min_violation = i_contact / i_limit - 1.0;
        out.argmax = lo;
        out.objective_at_argmax = power(lo);
        out.trace.emplace_back(lo, out.objective_at_argmax);
        return out;
    }

    const auto grid = logspace(lo, hi, 256);
    std::vector<bool> ok(grid.size());
    bool all_ok = true;
    bool any_ok = false;
    double least_violation = std::numeric_limits<double>::infinity();
    double least_violation_at = lo;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double ic = load_current(grid[i]);
        ok[i] = ic <= i_limit;
        all_ok = all_ok && ok[i];
        any_ok = any_ok || ok[i];
        if (ic / i_limit - 1.0 < least_violation) {
            least_violation = ic / i_limit - 1.0;
            least_violation_at = grid[i];
        }
    }
    if (!any_ok) {
        out.feasible = false;
        out.constraint_active = Constraint::LoadCurrent;
        out.min_violation = least_violation;
        out.argmax = least_violation_at;
        out.objective_at_argmax = power(least_violation_at);
        out.trace.emplace_back(out.argmax, out.objective_at_argmax);
        return out;
    }

    if (rx.r_s > 0.0) {
        auto free = optimal_load(rx, src, body, f_hz, lo, hi, opt);
        if (all_ok || load_current(free.argmax) <= i_limit) return free;
    }

    // Walk each feasible stretch of the grid; pin infeasible edges to the
    // constraint boundary by bisection, then search inside.
    auto boundary = [&](double feasible_r, double infeasible_r) {
        for (int k = 0; k < 200; ++k) {
            const double mid = std::sqrt(feasible_r * infeasible_r);
            if (load_current(mid) <= i_limit) feasible_r = mid; else infeasible_r = mid;
            if (std::abs(infeasible_r - feasible_r) <= 1e-12 * feasible_r) break;
        }
        return feasible_r;
    };

    bool have = false;
    std::size_t i = 0;
    while (i < grid.size()) {
        if (!ok[i]) { ++i; continue; }
        std::size_t j = i;
        while (j + 1 < grid.size() && ok[j + 1]) ++j;
        const double a = i == 0 ? grid[0] : boundary(grid[i], grid[i - 1]);
        const double b = j + 1 == grid.size() ? grid[j] : boundary(grid[j], grid[j + 1]);
        GoldenResult g;
        if (b > a * (1.0 + 1e-12)) {
            g = golden_section_max(power, a, b, opt.rel_tol, true);
        } else {
            g.x = a;
            g.fx = power(a);
            g.trace.emplace_back(g.x, g.fx);
        }
        out.trace.insert(out.trace.end(), g.trace.begin(), g.trace.end());
        if (!have || g.fx > out.objective_at_argmax) {
            have = true;
            out.argmax = g.x;
            out.objective_at_argmax = g.fx;
        }
        i = j + 1;
    }
    if (load_current(out.argmax) >= i_limit * (1.0 - 1e-6)) {
        out.constraint_active = Constraint::LoadCurrent;
    } else {
        out.constraint_active = detail::bound_state(out.argmax, lo, hi, opt.rel_tol);
    }
    return out;
}

struct MultiReceiverReport {
    /// Each receiver evaluated alone at its own resonance.
    std::vector<channel::OperatingPoint> independent;
    /// Same receivers solved together in one network (joint mode only).
    std::vector<channel::OperatingPoint> joint;
    /// Relative |V_o| deviation joint vs. independent, per receiver.
    std::vector<double> deviation;
    std::vector<std::string> warnings;
};

/// Powers several receivers from one broadband source, each at its own
/// resonant frequency, assuming the receivers barely load the body. With
/// `joint`, also solves all branches together and reports the deviation.
[[nodiscard]] inline MultiReceiverReport multi_receiver_power(const std::vector<channel::ReceiverParams>& receivers,
                                                              const channel::SourceModel& src,
                                                              const channel::BodyModel& body, bool joint = false,
                                                              double warn_threshold = 0.10) {
    MultiReceiverReport out;
    for (const auto& rx : receivers) {
        out.independent.push_back(channel::received_power(rx, src, body, channel::resonant_frequency(rx)));
    }
    if (!joint || receivers.empty()) return out;

    const auto built = acnet::build_multi_receiver_netlist(receivers, src, body);
    for (std::size_t k = 0; k < receivers.size(); ++k) {
        const double f = out.independent[k].frequency;
        const auto sol = acnet::solve(built.netlist, f);
        channel::OperatingPoint op;
        op.frequency = f;
        op.v_b = sol.voltage(built.body);
        op.v_o = sol.voltage(built.probes[k].plus) - sol.voltage(built.probes[k].minus);
        op.p_out_rms = std::norm(op.v_o) / receivers[k].r_l;
        const double ref = std::abs(out.independent[k].v_o);
        const double dev = std::abs(std::abs(op.v_o) - ref) / ref;
        out.deviation.push_back(dev);
        if (dev > warn_threshold) {
            out.warnings.push_back("receiver " + std::to_string(k) + ": loading assumption violated, independent P = " +
                                   std::to_string(out.independent[k].p_out_rms) + " W, joint P = " +
                                   std::to_string(op.p_out_rms) + " W");
        }
        out.joint.push_back(op);
    }
    return out;
}

enum class Topology { M2M, M2W, W2W, W2WResonant };

[[nodiscard]] inline std::string_view to_string(Topology t) noexcept {
    switch (t) {
    case Topology::M2M: return "M2M";
    case Topology::M2W: return "M2W";
    case Topology::W2W: return "W2W";
    case Topology::W2WResonant: return "W2W-resonant";
    }
    return "?";
}

struct TopologyRow {
    double frequency{0.0};
    double gain_db{0.0};  ///< 20 log10 |V_o / V_IN|
};

struct TopologyCurve {
    Topology topology{Topology::M2W};
    std::vector<TopologyRow> rows;
};

/// Receiver with a near-ideal return path (C_ret = 1000 x C_GB, or 1000 x
/// C_ret when C_GB = 0), its inductor retuned to keep the original resonance.
[[nodiscard]] inline channel::ReceiverParams machine_receiver(const channel::ReceiverParams& rx) {
    auto m = rx;
    m.c_ret = 1000.0 * (rx.c_gb > 0.0 ? rx.c_gb : rx.c_ret);
    if (rx.l > 0.0) m.l = optimal_inductor(m, channel::resonant_frequency(rx));
    return m;
}

/// Gain multiplier of a resonant wearable transmitter: a second-order
/// band-pass of quality `q` centred on `f_tx`, rising from 1 off-band to `q`
/// at the centre.
[[nodiscard]] inline double transmitter_boost(double f_hz, double f_tx, double q) {
    const double detune = f_hz / f_tx - f_tx / f_hz;
    const Complex band = 1.0 / Complex(1.0, q * detune);
    return std::abs(1.0 + (q - 1.0) * band);
}

/// Gain curves V_o / V_IN for the four transmitter/receiver pairings. The
/// resonant transmitter is centred on `f_tx`, defaulting to the receiver's
/// resonance.
[[nodiscard]] inline std::vector<TopologyCurve> compare_topologies(const channel::ReceiverParams& rx,
                                                                   const channel::BodyModel& body,
                                                                   const std::vector<double>& freqs, double c_ret_tx,
                                                                   double q, std::optional<double> f_tx = {}) {
    body.validate();
    if (!(c_ret_tx > 0.0)) throw DomainError("compare_topologies: C_ret_tx must be > 0");
    if (!(q >= 1.0)) throw DomainError("compare_topologies: Q must be >= 1");
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        require_positive_frequency(freqs[i]);
        if (i > 0 && !(freqs[i] > freqs[i - 1])) throw DomainError("compare_topologies: frequencies must increase");
    }
    const double center = f_tx ? *f_tx : channel::resonant_frequency(rx);
    const double wearable_factor = c_ret_tx / (body.c_b + c_ret_tx);
    const auto machine = machine_receiver(rx);
    auto db = [](double g) { return 20.0 * std::log10(g); };

    std::vector<TopologyCurve> out{{Topology::M2M, {}}, {Topology::M2W, {}}, {Topology::W2W, {}},
                                   {Topology::W2WResonant, {}}};
    for (double f : freqs) {
        const double h = std::abs(channel::transfer_function(rx, f));
        out[0].rows.push_back({f, db(std::abs(channel::transfer_function(machine, f)))});
        out[1].rows.push_back({f, db(h)});
        out[2].rows.push_back({f, db(wearable_factor * h)});
        out[3].rows.push_back({f, db(wearable_factor * h * transmitter_boost(f, center, q))});
    }
    return out;
}

}  // namespace hbp::optimize
