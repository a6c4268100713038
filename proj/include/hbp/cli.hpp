#pragma once

// Command orchestration behind the `hbp` executable. Kept header-only so the
// test suites can drive every command in-process.

#include "hbp/acnet.hpp"
#include "hbp/analysis.hpp"
#include "hbp/channel.hpp"
#include "hbp/channel_netlist.hpp"
#include "hbp/csv.hpp"
#include "hbp/optimize.hpp"
#include "hbp/safety.hpp"
#include "hbp/scenario.hpp"
#include "hbp/sweep.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace hbp::cli {

inline constexpr std::string_view kVersion = "1.0.0";

enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kModel = 3,
    kSafetyFail = 4,
};

inline const std::vector<std::string_view>& commands() {
    static const std::vector<std::string_view> list{
        "sweep-freq",        "sweep-load", "sweep-inductance", "sweep-vin", "resonance",
        "optimize-load",     "optimize-inductor", "safety",    "max-safe-vin", "fit",
        "multi",             "compare-topologies", "oracle-check"};
    return list;
}

struct Options {
    std::string command;
    std::string config_path;
    std::string out_path{"-"};
    bool plot_data{false};
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> points;
    std::optional<double> tolerance;
    bool joint{false};
    bool oracle{false};
};

struct CommandOutput {
    csv::ResultTable table;
    int exit_code{kOk};
};

namespace detail {

inline double operating_frequency(const config::ScenarioConfig& cfg) {
    if (cfg.frequency) return *cfg.frequency;
    const auto& rx = cfg.receiver();
    if (rx.l > 0.0) return channel::resonant_frequency(rx);
    throw ValidationError("config: 'frequency' is required when the receiver has no inductor");
}

inline const config::SweepBlock& sweep_block(const config::ScenarioConfig& cfg, std::optional<SweepAxis> axis) {
    if (!cfg.sweep) throw ValidationError("config: [sweep] section is required for this command");
    if (axis && cfg.sweep->axis && *cfg.sweep->axis != *axis) {
        throw ValidationError("config: sweep.axis '" + std::string(axis_info(*cfg.sweep->axis).name) +
                              "' does not match this command (expects '" + std::string(axis_info(*axis).name) + "')");
    }
    return *cfg.sweep;
}

inline std::vector<double> grid_of(const config::SweepBlock& sw, const Options& opt) {
    auto copy = sw;
    if (opt.points) copy.points = *opt.points;
    if (copy.points < 1) throw ValidationError("--points must be >= 1");
    return copy.grid();
}

inline Scenario scenario_of(const config::ScenarioConfig& cfg, bool needs_frequency) {
    Scenario s{cfg.receiver(), cfg.src(), cfg.bdy(), 0.0};
    if (needs_frequency) s.frequency = operating_frequency(cfg);
    return s;
}

/// Full-network operating point: transmitter, body and receiver solved together.
inline channel::OperatingPoint network_point(const Scenario& s, SweepAxis axis, double x) {
    auto rx = s.rx;
    auto src = s.src;
    double f = s.frequency;
    switch (axis) {
    case SweepAxis::Frequency: f = x; break;
    case SweepAxis::Load: rx.r_l = x; break;
    case SweepAxis::Inductance: rx.l = x; break;
    case SweepAxis::InputVoltage: src = src.with_v_in(x); break;
    }
    acnet::ChannelNodes nodes;
    const auto net = acnet::build_channel_netlist(rx, src, s.body, &nodes);
    const auto sol = acnet::solve(net, f);
    channel::OperatingPoint op;
    op.frequency = f;
    op.v_b = sol.voltage(nodes.body);
    op.v_o = sol.probe_voltage;
    op.p_out_rms = std::norm(op.v_o) / rx.r_l;
    return op;
}

inline CommandOutput run_sweep(const config::ScenarioConfig& cfg, const Options& opt, SweepAxis axis) {
    const auto grid = grid_of(sweep_block(cfg, axis), opt);
    const auto s = scenario_of(cfg, axis != SweepAxis::Frequency);
    SweepResult sweep;
    if (opt.oracle) {
        sweep.axis = axis;
        for (double x : grid) {
            const auto op = network_point(s, axis, x);
            sweep.rows.push_back({x, op.v_o, op.p_out_rms});
        }
        sweep.validate();
    } else {
        sweep = simulate_sweep(s, axis, grid);
    }
    return {csv::sweep_table(sweep), kOk};
}

inline CommandOutput run_resonance(const config::ScenarioConfig& cfg, const Options& opt) {
    const auto grid = grid_of(sweep_block(cfg, SweepAxis::Frequency), opt);
    const auto s = scenario_of(cfg, false);
    const auto sweep = simulate_sweep(s, SweepAxis::Frequency, grid);
    const auto peak = analysis::find_resonant_peak(sweep);

    csv::ResultTable t;
    t.columns = {"f0_closed_form[Hz]", "f_peak[Hz]", "p_peak[W]", "resonant_gain[1]", "q[1]", "q_valid", "q_lower_bound",
                 "window_truncated"};
    double q = 0.0;
    double q_valid = 0.0;
    double q_lower = 0.0;
    try {
        const auto qr = analysis::q_factor(sweep);
        q = qr.q;
        q_valid = 1.0;
        q_lower = qr.lower_bound ? 1.0 : 0.0;
    } catch (const WindowTruncationError& e) {
        t.notes.emplace_back(e.what());
    }
    if (peak.window_truncated) t.notes.emplace_back("peak at the sweep window edge; true peak may lie outside");
    t.rows.push_back({channel::resonant_frequency(s.rx), peak.f_peak, peak.p_peak, channel::resonant_gain(s.rx), q,
                      q_valid, q_lower, peak.window_truncated ? 1.0 : 0.0});
    return {t, kOk};
}

inline std::pair<double, double> load_bounds(const config::ScenarioConfig& cfg) {
    if (!cfg.optimize || !cfg.optimize->r_lo || !cfg.optimize->r_hi) {
        throw ValidationError("config: optimize.R_lo and optimize.R_hi are required for this command");
    }
    return {*cfg.optimize->r_lo, *cfg.optimize->r_hi};
}

inline CommandOutput optimization_output(const optimize::OptimizationResult& r, const Options& opt,
                                         std::string_view x_column) {
    csv::ResultTable t;
    if (opt.plot_data) {
        // The plot variant shows the search trace, sorted by candidate.
        auto trace = r.trace;
        std::sort(trace.begin(), trace.end());
        trace.erase(std::unique(trace.begin(), trace.end(),
                                [](const auto& a, const auto& b) { return a.first == b.first; }),
                    trace.end());
        t.columns = {std::string(x_column), "p_out_rms[W]"};
        for (const auto& [x, y] : trace) t.rows.push_back({x, y});
        return {t, r.feasible ? kOk : kModel};
    }
    t.columns = {std::string(x_column), "p_out_rms[W]", "constraint_code", "fallback_used", "feasible"};
    t.rows.push_back({r.argmax, r.objective_at_argmax, static_cast<double>(r.constraint_active),
                      r.fallback_used ? 1.0 : 0.0, r.feasible ? 1.0 : 0.0});
    t.notes.push_back("constraint: " + std::string(optimize::to_string(r.constraint_active)));
    if (!r.feasible) t.notes.push_back("infeasible; minimal violation " + csv::format_double(r.min_violation));
    return {t, r.feasible ? kOk : kModel};
}

inline CommandOutput run_optimize_load(const config::ScenarioConfig& cfg, const Options& opt) {
    const auto s = scenario_of(cfg, true);
    const auto [lo, hi] = load_bounds(cfg);
    optimize::LoadSearchOptions lo_opt;
    if (opt.tolerance) lo_opt.rel_tol = *opt.tolerance;
    lo_opt.re_resonate = cfg.optimize->re_resonate;
    const auto result = cfg.optimize->i_limit
                            ? optimize::max_power_under_current_limit(s.rx, s.src, s.body, s.frequency,
                                                                      *cfg.optimize->i_limit, lo, hi, lo_opt)
                            : optimize::optimal_load(s.rx, s.src, s.body, s.frequency, lo, hi, lo_opt);
    return optimization_output(result, opt, "r_l_opt[ohm]");
}

inline CommandOutput run_optimize_inductor(const config::ScenarioConfig& cfg) {
    if (!cfg.optimize || !cfg.optimize->f_target) throw ValidationError("config: optimize.f_target is required");
    const auto& rx = cfg.receiver();
    const double l = optimize::optimal_inductor(rx, *cfg.optimize->f_target);
    auto tuned = rx;
    tuned.l = l;
    csv::ResultTable t;
    t.columns = {"l_opt[H]", "f0[Hz]", "resonant_gain[1]"};
    t.rows.push_back({l, channel::resonant_frequency(tuned), channel::resonant_gain(tuned)});
    return {t, kOk};
}

inline double safety_frequency(const config::ScenarioConfig& cfg) {
    if (cfg.frequency) return *cfg.frequency;
    if (!cfg.receivers.empty()) return operating_frequency(cfg);
    throw ValidationError("config: 'frequency' is required for safety commands without a receiver");
}

inline CommandOutput run_safety(const config::ScenarioConfig& cfg) {
    if (!cfg.safety) throw ValidationError("config: [safety] section with a limit table is required");
    const auto table = safety::load_limit_table(cfg.safety->limits_path);
    safety::SafetyInputs in{cfg.src(), cfg.bdy(), safety_frequency(cfg), cfg.safety->e_measured, cfg.safety->h_measured};
    const auto report = safety::check(in, table);

    csv::ResultTable t;
    t.columns = {"frequency[Hz]", "contact_current_rms[A]", "limit[A]", "margin[1]", "pass"};
    std::vector<double> row{report.frequency, report.contact_current_rms, report.limit, report.margin,
                            report.pass ? 1.0 : 0.0};
    for (const auto& fc : report.field_checks) {
        const std::string unit = fc.name == "e_field" ? "[V/m]" : "[A/m]";
        t.columns.push_back(fc.name + "_measured" + unit);
        t.columns.push_back(fc.name + "_limit" + unit);
        t.columns.push_back(fc.name + "_pass");
        row.insert(row.end(), {fc.measured, fc.limit, fc.pass ? 1.0 : 0.0});
        if (!fc.pass) t.notes.push_back(fc.name + " exceeds its limit");
    }
    t.rows.push_back(row);
    t.notes.insert(t.notes.end(), report.notes.begin(), report.notes.end());
    return {t, report.pass ? kOk : kSafetyFail};
}

inline CommandOutput run_max_safe_vin(const config::ScenarioConfig& cfg) {
    if (!cfg.safety) throw ValidationError("config: [safety] section with a limit table is required");
    const auto table = safety::load_limit_table(cfg.safety->limits_path);
    const double f = safety_frequency(cfg);
    const auto& src = cfg.src();
    const double v_max = safety::max_safe_input(cfg.bdy(), f, table, src);
    const auto at_max = src.with_v_in(v_max);
    csv::ResultTable t;
    t.columns = {"frequency[Hz]", "v_in_max[V]", "v_b_rms_max[V]", "contact_limit[A]"};
    t.rows.push_back({f, v_max, channel::body_potential(at_max, cfg.bdy(), f), *table.band_for(f).contact_current});
    t.notes.push_back("v_in_max is stated in the source convention (" + std::string(to_string(src.convention)) + ")");
    return {t, kOk};
}

inline CommandOutput run_fit(const config::ScenarioConfig& cfg, const Options& opt) {
    if (!cfg.fit) throw ValidationError("config: [fit] section is required");
    const auto& fb = *cfg.fit;
    SweepAxis axis = SweepAxis::Frequency;
    if (cfg.sweep && cfg.sweep->axis) axis = *cfg.sweep->axis;
    const auto base = scenario_of(cfg, axis != SweepAxis::Frequency);

    csv::ResultTable t;
    SweepResult observed;
    if (fb.observed_path) {
        auto imported = csv::import_measured(*fb.observed_path, axis);
        for (const auto& w : imported.warnings) t.notes.push_back(w);
        observed = std::move(imported.sweep);
    } else {
        // Synthetic observations from the configured receiver, with seeded
        // multiplicative Gaussian noise on power.
        const auto grid = grid_of(sweep_block(cfg, axis), opt);
        observed = simulate_sweep(base, axis, grid);
        std::mt19937_64 rng(opt.seed.value_or(cfg.seed));
        std::normal_distribution<double> noise(0.0, fb.noise);
        if (fb.noise > 0.0) {
            for (auto& r : observed.rows) r.p_out_rms *= 1.0 + noise(rng);
        }
        t.notes.push_back("synthetic observations, noise " + csv::format_double(fb.noise));
    }
    analysis::FitOptions fo;
    fo.max_iterations = fb.max_iterations;
    const auto report = analysis::fit_params(observed, fb.free, base, fb.init, fo);

    std::vector<double> row;
    for (auto p : fb.free) {
        t.columns.push_back(std::string(analysis::to_string(p)) + "[" + std::string(analysis::unit_of(p)) + "]");
        row.push_back(report.fitted_params.at(std::string(analysis::to_string(p))));
    }
    t.columns.insert(t.columns.end(), {"residual_rms[ln W]", "iterations", "converged"});
    row.insert(row.end(), {report.residual_rms, static_cast<double>(report.iterations), report.converged ? 1.0 : 0.0});
    t.rows.push_back(row);
    if (!report.converged) t.notes.emplace_back("fit did not converge; best-so-far values reported");
    return {t, kOk};
}

inline CommandOutput run_multi(const config::ScenarioConfig& cfg, const Options& opt, std::ostream& err) {
    if (cfg.receivers.empty()) throw ValidationError("config: at least one [receiver] is required");
    const auto report = optimize::multi_receiver_power(cfg.receivers, cfg.src(), cfg.bdy(), opt.joint);
    csv::ResultTable t;
    t.columns = {"receiver", "frequency[Hz]", "v_b_rms[V]", "v_o_mag[V]", "p_out_rms[W]"};
    if (opt.joint) t.columns.insert(t.columns.end(), {"joint_v_o_mag[V]", "joint_p_out_rms[W]", "deviation[1]"});
    double total = 0.0;
    for (std::size_t k = 0; k < report.independent.size(); ++k) {
        const auto& p = report.independent[k];
        std::vector<double> row{static_cast<double>(k), p.frequency, std::abs(p.v_b), std::abs(p.v_o), p.p_out_rms};
        if (opt.joint) row.insert(row.end(), {std::abs(report.joint[k].v_o), report.joint[k].p_out_rms, report.deviation[k]});
        t.rows.push_back(row);
        total += p.p_out_rms;
    }
    t.notes.push_back("total independent power " + csv::format_double(total) + " W");
    for (const auto& w : report.warnings) {
        t.notes.push_back(w);
        err << "warning: " << w << '\n';
    }
    return {t, kOk};
}

inline CommandOutput run_compare(const config::ScenarioConfig& cfg, const Options& opt) {
    if (!cfg.topology) throw ValidationError("config: [topology] section is required");
    const auto grid = grid_of(sweep_block(cfg, SweepAxis::Frequency), opt);
    const auto curves = optimize::compare_topologies(cfg.receiver(), cfg.bdy(), grid, cfg.topology->c_ret_tx,
                                                     cfg.topology->q, cfg.topology->f_tx);
    csv::ResultTable t;
    t.columns = {"frequency[Hz]", "m2m[dB]", "m2w[dB]", "w2w[dB]", "w2w_resonant[dB]"};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        t.rows.push_back({grid[i], curves[0].rows[i].gain_db, curves[1].rows[i].gain_db, curves[2].rows[i].gain_db,
                          curves[3].rows[i].gain_db});
    }
    return {t, kOk};
}

inline CommandOutput run_oracle_check(const config::ScenarioConfig& cfg, const Options& opt) {
    const auto grid = grid_of(sweep_block(cfg, SweepAxis::Frequency), opt);
    const auto& rx = cfg.receiver();
    const double tol = opt.tolerance.value_or(1e-9);
    const auto net = acnet::build_receiver_netlist(rx, 1.0);
    csv::ResultTable t;
    t.columns = {"frequency[Hz]", "h_closed_re[1]", "h_closed_im[1]", "h_network_re[1]", "h_network_im[1]", "rel_diff[1]"};
    double worst = 0.0;
    for (double f : grid) {
        const Complex h = channel::transfer_function(rx, f);
        const Complex h_net = acnet::solve(net, f).probe_voltage;
        const double rel = std::abs(h_net - h) / std::abs(h);
        worst = std::max(worst, rel);
        t.rows.push_back({f, h.real(), h.imag(), h_net.real(), h_net.imag(), rel});
    }
    t.notes.push_back("max relative difference " + csv::format_double(worst) + ", tolerance " + csv::format_double(tol));
    return {t, worst <= tol ? kOk : kModel};
}

inline void write_atomically(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace detail

/// Executes one command against a loaded config. Throws on error.
[[nodiscard]] inline CommandOutput execute(const config::ScenarioConfig& cfg, const Options& opt, std::ostream& err) {
    const auto& c = opt.command;
    if (c == "sweep-freq") return detail::run_sweep(cfg, opt, SweepAxis::Frequency);
    if (c == "sweep-load") return detail::run_sweep(cfg, opt, SweepAxis::Load);
    if (c == "sweep-inductance") return detail::run_sweep(cfg, opt, SweepAxis::Inductance);
    if (c == "sweep-vin") return detail::run_sweep(cfg, opt, SweepAxis::InputVoltage);
    if (c == "resonance") return detail::run_resonance(cfg, opt);
    if (c == "optimize-load") return detail::run_optimize_load(cfg, opt);
    if (c == "optimize-inductor") return detail::run_optimize_inductor(cfg);
    if (c == "safety") return detail::run_safety(cfg);
    if (c == "max-safe-vin") return detail::run_max_safe_vin(cfg);
    if (c == "fit") return detail::run_fit(cfg, opt);
    if (c == "multi") return detail::run_multi(cfg, opt, err);
    if (c == "compare-topologies") return detail::run_compare(cfg, opt);
    if (c == "oracle-check") return detail::run_oracle_check(cfg, opt);
    throw ValidationError("unknown command '" + c + "'");
}

[[nodiscard]] inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

/// Loads the config, runs the command and writes the table to `opt.out_path`
/// ("-" means `out`). Returns the process exit code.
inline int run(const Options& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = config::load_scenario(opt.config_path);
        auto result = execute(cfg, opt, err);
        auto& table = result.table;
        table.provenance = {"hbp " + std::string(kVersion), "command: " + opt.command,
                            "config_fnv1a64: " + hex64(cfg.content_hash)};
        std::ostringstream text;
        if (opt.plot_data) {
            table.write_plot_data(text);
            for (const auto& n : table.notes) text << "# note: " << n << '\n';
        } else {
            table.write_csv(text);
        }
        if (opt.out_path == "-") {
            out << text.str();
        } else {
            detail::write_atomically(opt.out_path, text.str());
        }
        return result.exit_code;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const Error& e) {
        err << "model error: " << e.what() << '\n';
        return kModel;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
}

}  // namespace hbp::cli
