#pragma once

// Resonance detection, quality factor, sensitivities and parameter
// calibration against sweep data.

#include "hbp/acnet.hpp"
#include "hbp/channel.hpp"
#include "hbp/channel_netlist.hpp"
#include "hbp/errors.hpp"
#include "hbp/golden.hpp"
#include "hbp/sweep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hbp::analysis {

// ---------------------------------------------------------------------------
// Peak detection
// ---------------------------------------------------------------------------

struct PeakResult {
    double f_peak{0.0};
    double p_peak{0.0};
    std::size_t grid_index{0};
    /// Grid maximum is the first or last row; the true peak may lie outside.
    bool window_truncated{false};
    bool refined_with_model{false};
};

struct PeakOptions {
    /// Local maxima whose prominence is below this fraction of the global
    /// maximum are treated as numerical ripple.
    double noise_floor{1e-6};
};

namespace detail {

/// Topographic prominence of the local maximum at `i`.
inline double prominence(const std::vector<double>& p, std::size_t i) {
    double left_min = p[i];
    for (std::size_t j = i; j-- > 0;) {
        if (p[j] > p[i]) break;
        left_min = std::min(left_min, p[j]);
    }
    double right_min = p[i];
    for (std::size_t j = i + 1; j < p.size(); ++j) {
        if (p[j] > p[i]) break;
        right_min = std::min(right_min, p[j]);
    }
    return p[i] - std::max(left_min, right_min);
}

/// Vertex of the parabola through three points (x may be non-uniform).
inline std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double d01 = (y1 - y0) / (x1 - x0);
    const double d12 = (y2 - y1) / (x2 - x1);
    const double a = (d12 - d01) / (x2 - x0);
    if (!(a < 0.0)) return {x1, y1};
    const double b = d01 - a * (x0 + x1);
    const double c = y0 - a * x0 * x0 - b * x0;
    double xv = -b / (2.0 * a);
    xv = std::clamp(xv, x0, x2);
    return {xv, (a * xv + b) * xv + c};
}

}  // namespace detail

/// Locates the resonant peak of a frequency sweep. Ties on the grid go to the
/// lowest frequency.
[[nodiscard]] inline PeakResult find_resonant_peak(const SweepResult& sweep, PeakOptions opt = {}) {
    const auto& rows = sweep.rows;
    if (rows.size() < 5) throw DomainError("find_resonant_peak: need at least 5 rows");
    std::vector<double> p(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) p[i] = rows[i].p_out_rms;

    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[best]) best = i;
    }
    const double p_max = p[best];

    std::vector<std::size_t> significant;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        if (p[i] > p[i - 1] && p[i] >= p[i + 1] && detail::prominence(p, i) > opt.noise_floor * p_max) {
            significant.push_back(i);
        }
    }
    if (significant.size() > 1) {
        std::ostringstream msg;
        msg << "find_resonant_peak: " << significant.size() << " interior maxima above the noise floor at";
        for (auto i : significant) msg << ' ' << rows[i].axis;
        throw AmbiguousPeakError(msg.str());
    }

    PeakResult out;
    out.grid_index = best;
    out.f_peak = rows[best].axis;
    out.p_peak = p_max;
    if (best == 0 || best + 1 == rows.size()) {
        out.window_truncated = true;
        return out;
    }
    const double lo = rows[best - 1].axis;
    const double hi = rows[best + 1].axis;
    if (sweep.model) {
        const auto g = golden_section_max(sweep.model, lo, hi, 1e-12);
        if (g.fx >= p_max) {
            out.f_peak = g.x;
            out.p_peak = g.fx;
        }
        out.refined_with_model = true;
    } else {
        const auto [xv, yv] = detail::parabola_vertex(lo, p[best - 1], rows[best].axis, p_max, hi, p[best + 1]);
        out.f_peak = xv;
        out.p_peak = std::max(yv, p_max);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form inversions
// ---------------------------------------------------------------------------

/// C_ret + C_GB implied by a resonance at `f_peak` with inductor `l`.
[[nodiscard]] inline double fit_total_capacitance(double l, double f_peak) {
    if (!(l > 0.0)) throw DomainError("fit_total_capacitance: L must be > 0");
    require_positive_frequency(f_peak);
    const double w = angular(f_peak);
    return 1.0 / (l * w * w);
}

/// Ground-coupling ratio C_GB / C_ret implied by a resonant received power.
[[nodiscard]] inline double capacitance_ratio_from_power(double p_rms, double r_l, double v_b_rms) {
    if (!(p_rms > 0.0) || !(r_l > 0.0) || !(v_b_rms > 0.0)) {
        throw DomainError("capacitance_ratio_from_power: inputs must be positive");
    }
    const double gain = std::sqrt(p_rms * r_l) / v_b_rms;
    if (gain > 1.0) {
        throw InconsistentMeasurementError("capacitance_ratio_from_power: implied gain " + std::to_string(gain) +
                                           " exceeds 1");
    }
    return 1.0 / gain - 1.0;
}

// ---------------------------------------------------------------------------
// Quality factor
// ---------------------------------------------------------------------------

struct QResult {
    double q{0.0};
    double f_peak{0.0};
    double f_lo{0.0};
    double f_hi{0.0};
    /// Half-power crossings fall within one grid step of the peak; the
    /// bandwidth is not resolved and q is a lower bound.
    bool lower_bound{false};
};

[[nodiscard]] inline QResult q_factor(const SweepResult& sweep) {
    if (sweep.axis != SweepAxis::Frequency) throw MisuseError("q_factor: sweep must be over frequency");
    const auto peak = find_resonant_peak(sweep);
    if (peak.window_truncated) throw WindowTruncationError("q_factor: peak at the edge of the sweep window");
    const auto& rows = sweep.rows;
    const double half = 0.5 * peak.p_peak;
    const std::size_t i = peak.grid_index;

    auto cross = [&](std::size_t a, std::size_t b) {
        const double t = (half - rows[a].p_out_rms) / (rows[b].p_out_rms - rows[a].p_out_rms);
        return rows[a].axis + t * (rows[b].axis - rows[a].axis);
    };

    std::optional<std::size_t> left;
    for (std::size_t j = i; j-- > 0;) {
        if (rows[j].p_out_rms <= half) { left = j; break; }
    }
    std::optional<std::size_t> right;
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
        if (rows[j].p_out_rms <= half) { right = j; break; }
    }
    if (!left || !right) {
        throw WindowTruncationError("q_factor: half-power point outside the sweep window");
    }
    QResult out;
    out.f_peak = peak.f_peak;
    out.f_lo = cross(*left, *left + 1);
    out.f_hi = cross(*right - 1, *right);
    out.q = out.f_peak / (out.f_hi - out.f_lo);
    out.lower_bound = (*left + 1 == i) && (*right == i + 1);
    return out;
}

// ---------------------------------------------------------------------------
// Sensitivity
// ---------------------------------------------------------------------------

enum class Target { ResonantFrequency, Gain, PowerAtF };

enum class Param { CRet, CGb, L, RL, CL, Rs, CTotal };

[[nodiscard]] inline std::string_view to_string(Param p) noexcept {
    switch (p) {
    case Param::CRet: return "C_ret";
    case Param::CGb: return "C_GB";
    case Param::L: return "L";
    case Param::RL: return "R_L";
    case Param::CL: return "C_L";
    case Param::Rs: return "r_s";
    case Param::CTotal: return "C_total";
    }
    return "?";
}

[[nodiscard]] inline std::optional<Param> parse_param(std::string_view s) noexcept {
    for (auto p : {Param::CRet, Param::CGb, Param::L, Param::RL, Param::CL, Param::Rs, Param::CTotal}) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

[[nodiscard]] inline double get_param(const channel::ReceiverParams& rx, Param p) {
    switch (p) {
    case Param::CRet: return rx.c_ret;
    case Param::CGb: return rx.c_gb;
    case Param::L: return rx.l;
    case Param::RL: return rx.r_l;
    case Param::CL: return rx.c_l;
    case Param::Rs: return rx.r_s;
    case Param::CTotal: return rx.c_total();
    }
    return 0.0;
}

[[nodiscard]] inline channel::ReceiverParams with_param(channel::ReceiverParams rx, Param p, double v) {
    switch (p) {
    case Param::CRet: rx.c_ret = v; break;
    case Param::CGb: rx.c_gb = v; break;
    case Param::L: rx.l = v; break;
    case Param::RL: rx.r_l = v; break;
    case Param::CL: rx.c_l = v; break;
    case Param::Rs: rx.r_s = v; break;
    case Param::CTotal: {
        // Scale both capacitances, keeping C_GB / C_ret fixed.
        const double k = v / rx.c_total();
        rx.c_ret *= k;
        rx.c_gb *= k;
        break;
    }
    }
    return rx;
}

struct Sensitivity {
    double numeric{0.0};
    std::optional<double> analytic;
};

/// d(target)/d(param) at `s`, by Richardson-extrapolated central differences
/// with relative step 1e-6. `s.frequency` is used for PowerAtF.
[[nodiscard]] inline Sensitivity sensitivity(const Scenario& s, Target target, Param param) {
    const double x0 = get_param(s.rx, param);
    if (!(x0 > 0.0)) throw DomainError("sensitivity: parameter " + std::string(to_string(param)) + " must be > 0");

    auto eval = [&](double x) {
        const auto rx = with_param(s.rx, param, x);
        switch (target) {
        case Target::ResonantFrequency: return channel::resonant_frequency(rx);
        case Target::Gain: return channel::resonant_gain(rx);
        case Target::PowerAtF: return channel::received_power(rx, s.src, s.body, s.frequency).p_out_rms;
        }
        return 0.0;
    };
    auto central = [&](double h) { return (eval(x0 + h) - eval(x0 - h)) / (2.0 * h); };
    const double h = 1e-6 * x0;
    Sensitivity out;
    out.numeric = (4.0 * central(0.5 * h) - central(h)) / 3.0;

    const auto& rx = s.rx;
    if (target == Target::ResonantFrequency) {
        const double f0 = channel::resonant_frequency(rx);
        switch (param) {
        case Param::L: out.analytic = -f0 / (2.0 * rx.l); break;
        case Param::CRet:
        case Param::CGb:
        case Param::CTotal: out.analytic = -f0 / (2.0 * rx.c_total()); break;
        default: out.analytic = 0.0; break;
        }
    } else if (target == Target::Gain) {
        const double ct = rx.c_total();
        switch (param) {
        case Param::CRet: out.analytic = rx.c_gb / (ct * ct); break;
        case Param::CGb: out.analytic = -rx.c_ret / (ct * ct); break;
        default: out.analytic = 0.0; break;
        }
    }
    return out;
}

/// How far the grounded closed form (V_B = V_IN) is from the network solve
/// once R_S, R_B and receiver loading are included.
struct GroundedDropReport {
    double closed_form_v_b{0.0};
    Complex network_v_b{};
    double relative_difference{0.0};
};

[[nodiscard]] inline GroundedDropReport grounded_drop_discrepancy(const channel::ReceiverParams& rx,
                                                                  const channel::SourceModel& src,
                                                                  const channel::BodyModel& body, double f_hz) {
    acnet::ChannelNodes nodes;
    const auto net = acnet::build_channel_netlist(rx, src, body, &nodes);
    const auto sol = acnet::solve(net, f_hz);
    GroundedDropReport out;
    out.closed_form_v_b = channel::body_potential(src, body, f_hz);
    out.network_v_b = sol.voltage(nodes.body);
    out.relative_difference = std::abs(out.network_v_b - out.closed_form_v_b) / out.closed_form_v_b;
    return out;
}

// ---------------------------------------------------------------------------
// Least-squares calibration
// ---------------------------------------------------------------------------

/// Parameters a fit may vary.
enum class FitParam { CRet, CGb, Rs, L };

[[nodiscard]] inline std::string_view to_string(FitParam p) noexcept {
    switch (p) {
    case FitParam::CRet: return "C_ret";
    case FitParam::CGb: return "C_GB";
    case FitParam::Rs: return "r_s";
    case FitParam::L: return "L";
    }
    return "?";
}

[[nodiscard]] inline std::string_view unit_of(FitParam p) noexcept {
    switch (p) {
    case FitParam::CRet:
    case FitParam::CGb: return "F";
    case FitParam::Rs: return "ohm";
    case FitParam::L: return "H";
    }
    return "";
}

[[nodiscard]] inline std::optional<FitParam> parse_fit_param(std::string_view s) noexcept {
    for (auto p : {FitParam::CRet, FitParam::CGb, FitParam::Rs, FitParam::L}) {
        if (to_string(p) == s) return p;
    }
    return std::nullopt;
}

[[nodiscard]] inline double& field(channel::ReceiverParams& rx, FitParam p) {
    switch (p) {
    case FitParam::CRet: return rx.c_ret;
    case FitParam::CGb: return rx.c_gb;
    case FitParam::Rs: return rx.r_s;
    case FitParam::L: return rx.l;
    }
    return rx.c_ret;
}

struct FitOptions {
    int max_iterations{200};
    /// Stop when every log-parameter step is smaller than this.
    double step_tolerance{1e-12};
    /// Columns of the Jacobian this close to parallel (|cos| > 1 - tol) are
    /// treated as collinear.
    double collinearity_tolerance{1e-9};
};

struct FitReport {
    std::map<std::string, double> fitted_params;
    channel::ReceiverParams receiver;
    /// rms residual of log(P_model / P_observed), i.e. in natural-log units of power.
    double residual_rms{0.0};
    int iterations{0};
    bool converged{false};
    /// Sum of squared residuals after each accepted step, starting at the initial point.
    std::vector<double> cost_history;
};

namespace detail {

/// Solves the small dense SPD-ish system `a x = b` in place with partial pivoting.
inline bool solve_small(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::abs(a[r * n + k]) > std::abs(a[piv * n + k])) piv = r;
        }
        if (a[piv * n + k] == 0.0) return false;
        if (piv != k) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
            std::swap(b[k], b[piv]);
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = a[r * n + k] / a[k * n + k];
            for (std::size_t c = k; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
            b[r] -= f * b[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double acc = b[k];
        for (std::size_t c = k + 1; c < n; ++c) acc -= a[k * n + c] * b[c];
        b[k] = acc / a[k * n + k];
    }
    return true;
}

}  // namespace detail

/// Fits `free` receiver parameters so the closed-form power matches
/// `observed` in log space. `base` supplies every fixed quantity; `init`
/// gives starting values (all > 0) for the free parameters.
///
/// Damped Gauss-Newton (Levenberg-Marquardt) over log-parameters with a
/// central-difference Jacobian; only cost-decreasing steps are accepted.
[[nodiscard]] inline FitReport fit_params(const SweepResult& observed, const std::vector<FitParam>& free,
                                          const Scenario& base, const std::map<FitParam, double>& init,
                                          FitOptions opt = {}) {
    if (free.empty()) throw DomainError("fit_params: no free parameters");
    const std::size_t m = observed.rows.size();
    const std::size_t n = free.size();
    for (const auto& r : observed.rows) {
        if (!(r.p_out_rms > 0.0)) throw DomainError("fit_params: observed powers must be > 0");
    }

    std::vector<double> theta(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto it = init.find(free[k]);
        if (it == init.end() || !(it->second > 0.0)) {
            throw DomainError("fit_params: missing or non-positive initial value for " +
                              std::string(to_string(free[k])));
        }
        theta[k] = std::log(it->second);
    }

    auto scenario_at = [&](const std::vector<double>& t) {
        Scenario s = base;
        for (std::size_t k = 0; k < n; ++k) field(s.rx, free[k]) = std::exp(t[k]);
        return s;
    };
    auto residuals = [&](const std::vector<double>& t) {
        const Scenario s = scenario_at(t);
        std::vector<double> r(m);
        for (std::size_t i = 0; i < m; ++i) {
            const double p = evaluate_at(s, observed.axis, observed.rows[i].axis).p_out_rms;
            r[i] = std::log(p) - std::log(observed.rows[i].p_out_rms);
        }
        return r;
    };
    auto cost_of = [](const std::vector<double>& r) {
        double c = 0.0;
        for (double v : r) c += v * v;
        return c;
    };
    auto jacobian = [&](const std::vector<double>& t) {
        std::vector<double> jac(m * n);
        constexpr double h = 1e-6;
        for (std::size_t k = 0; k < n; ++k) {
            auto tp = t;
            auto tm = t;
            tp[k] += h;
            tm[k] -= h;
            const auto rp = residuals(tp);
            const auto rm = residuals(tm);
            for (std::size_t i = 0; i < m; ++i) jac[i * n + k] = (rp[i] - rm[i]) / (2.0 * h);
        }
        return jac;
    };

    auto jac = jacobian(theta);
    // Identifiability: every column must carry information and no two may be parallel.
    {
        std::vector<double> norm(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < m; ++i) norm[k] += jac[i * n + k] * jac[i * n + k];
            norm[k] = std::sqrt(norm[k]);
        }
        const double biggest = *std::max_element(norm.begin(), norm.end());
        for (std::size_t k = 0; k < n; ++k) {
            if (!(norm[k] > 1e-12 * biggest) || norm[k] == 0.0) {
                throw IdentifiabilityError("fit_params: observations do not depend on " +
                                               std::string(to_string(free[k])),
                                           std::string(to_string(free[k])), "");
            }
        }
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                double dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += jac[i * n + a] * jac[i * n + b];
                const double cosine = dot / (norm[a] * norm[b]);
                if (std::abs(cosine) > 1.0 - opt.collinearity_tolerance) {
                    throw IdentifiabilityError("fit_params: " + std::string(to_string(free[a])) + " and " +
                                                   std::string(to_string(free[b])) +
                                                   " are not separately identifiable from these observations",
                                               std::string(to_string(free[a])), std::string(to_string(free[b])));
                }
            }
        }
    }
    if (m < 2 * n) {
        throw DomainError("fit_params: need at least " + std::to_string(2 * n) + " observations, got " +
                          std::to_string(m));
    }

    FitReport report;
    auto r = residuals(theta);
    double cost = cost_of(r);
    report.cost_history.push_back(cost);
    double lambda = 1e-3;

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        report.iterations = iter + 1;
        if (iter > 0) jac = jacobian(theta);
        std::vector<double> jtj(n * n, 0.0);
        std::vector<double> jtr(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t a = 0; a < n; ++a) {
                jtr[a] += jac[i * n + a] * r[i];
                for (std::size_t b = 0; b < n; ++b) jtj[a * n + b] += jac[i * n + a] * jac[i * n + b];
            }
        }

        bool accepted = false;
        bool small_step = false;
        while (lambda < 1e16) {
            auto a = jtj;
            std::vector<double> step(n);
            for (std::size_t k = 0; k < n; ++k) {
                a[k * n + k] += lambda * std::max(jtj[k * n + k], 1e-300);
                step[k] = -jtr[k];
            }
            if (!detail::solve_small(a, step, n)) {
                lambda *= 10.0;
                continue;
            }
            double max_step = 0.0;
            for (double v : step) max_step = std::max(max_step, std::abs(v));
            auto trial = theta;
            for (std::size_t k = 0; k < n; ++k) trial[k] += step[k];
            const auto r_trial = residuals(trial);
            const double c_trial = cost_of(r_trial);
            if (std::isfinite(c_trial) && c_trial < cost) {
                theta = trial;
                r = r_trial;
                cost = c_trial;
                report.cost_history.push_back(cost);
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                small_step = max_step < opt.step_tolerance;
                break;
            }
            if (max_step < opt.step_tolerance) {
                small_step = true;
                break;
            }
            lambda *= 10.0;
        }
        if (small_step || cost < 1e-30 * static_cast<double>(m)) {
            report.converged = true;
            break;
        }
        if (!accepted) {
            // No descent direction left at any damping: a local minimum.
            double grad = 0.0;
            for (double v : jtr) grad = std::max(grad, std::abs(v));
            report.converged = grad < 1e-8 * std::max(1.0, std::sqrt(cost));
            break;
        }
    }

    const Scenario best = scenario_at(theta);
    report.receiver = best.rx;
    for (std::size_t k = 0; k < n; ++k) report.fitted_params[std::string(to_string(free[k]))] = std::exp(theta[k]);
    report.residual_rms = std::sqrt(cost / static_cast<double>(m));
    return report;
}

}  // namespace hbp::analysis
