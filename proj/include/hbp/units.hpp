#pragma once

#include "hbp/errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace hbp {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[nodiscard]] inline double angular(double f_hz) noexcept { return kTwoPi * f_hz; }

/// How a voltage amplitude is stated. All internal arithmetic is rms.
enum class Amplitude { PeakToPeak, Peak, Rms };

[[nodiscard]] inline double to_rms(double v, Amplitude conv) noexcept {
    switch (conv) {
    case Amplitude::PeakToPeak: return v / (2.0 * std::numbers::sqrt2);
    case Amplitude::Peak: return v / std::numbers::sqrt2;
    case Amplitude::Rms: return v;
    }
    return v;
}

[[nodiscard]] inline double from_rms(double v_rms, Amplitude conv) noexcept {
    switch (conv) {
    case Amplitude::PeakToPeak: return v_rms * 2.0 * std::numbers::sqrt2;
    case Amplitude::Peak: return v_rms * std::numbers::sqrt2;
    case Amplitude::Rms: return v_rms;
    }
    return v_rms;
}

[[nodiscard]] inline std::string_view to_string(Amplitude conv) noexcept {
    switch (conv) {
    case Amplitude::PeakToPeak: return "pp";
    case Amplitude::Peak: return "peak";
    case Amplitude::Rms: return "rms";
    }
    return "rms";
}

inline void require_positive_frequency(double f_hz) {
    if (!(f_hz > 0.0) || !std::isfinite(f_hz)) {
        throw DomainError("frequency must be positive and finite, got " + std::to_string(f_hz));
    }
}

[[nodiscard]] inline bool is_finite(Complex z) noexcept {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced.
[[nodiscard]] inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) throw DomainError("linspace: need at least one point");
    if (n == 1) return {lo};
    if (!(hi > lo)) throw DomainError("linspace: hi must exceed lo");
    std::vector<double> out(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced in log10.
[[nodiscard]] inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0)) throw DomainError("logspace: bounds must be positive");
    if (n == 1) return {lo};
    if (!(hi > lo)) throw DomainError("logspace: hi must exceed lo");
    std::vector<double> out(n);
    const double a = std::log10(lo);
    const double step = (std::log10(hi) - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(10.0, a + step * static_cast<double>(i));
    out.front() = lo;
    out.back() = hi;
    return out;
}

}  // namespace hbp
