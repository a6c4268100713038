#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace hbp {

struct GoldenResult {
    double x{0.0};
    double fx{0.0};
    /// Every (x, f(x)) evaluated, in evaluation order.
    std::vector<std::pair<double, double>> trace;
    /// An interior probe fell below both bracket ends, so the objective is
    /// not unimodal on [lo, hi].
    bool bracket_violated{false};
};

/// Golden-section maximisation of `f` on [lo, hi] until the bracket is
/// narrower than `rel_tol` relative to its centre. With `log_space` the
/// search runs over log(x), which suits quantities spanning decades.
template <typename F>
[[nodiscard]] GoldenResult golden_section_max(F&& f, double lo, double hi, double rel_tol, bool log_space = false) {
    constexpr double inv_phi = 0.6180339887498949;
    GoldenResult out;
    auto to_x = [log_space](double u) { return log_space ? std::exp(u) : u; };
    auto eval = [&](double u) {
        const double x = to_x(u);
        const double v = f(x);
        out.trace.emplace_back(x, v);
        return v;
    };

    double a = log_space ? std::log(lo) : lo;
    double b = log_space ? std::log(hi) : hi;
    const double fa = eval(a);
    const double fb = eval(b);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    if (fc < fa && fc < fb && fd < fa && fd < fb) out.bracket_violated = true;

    auto width_ok = [&]() {
        const double xa = to_x(a);
        const double xb = to_x(b);
        return std::abs(xb - xa) <= rel_tol * 0.5 * std::abs(xa + xb);
    };
    for (int iter = 0; iter < 400 && !width_ok(); ++iter) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    const double mid = 0.5 * (a + b);
    out.x = to_x(mid);
    out.fx = f(out.x);
    out.trace.emplace_back(out.x, out.fx);
    // Bracket ends can beat the interior when the optimum sits on a bound.
    if (fa > out.fx) { out.x = lo; out.fx = fa; }
    if (fb > out.fx) { out.x = hi; out.fx = fb; }
    return out;
}

}  // namespace hbp
