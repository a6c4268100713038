#pragma once

// Scenario configuration files (.scn). INI-style sections with `key = value`
// lines; `#` starts a comment. Physical values are SI with an optional
// multiplier suffix (p n u m k M). Parsing is strict: unknown sections or
// keys are rejected with their full key path, and no physical value has a
// default.
//
//     seed = 7
//     frequency = 1.6M          # operating frequency (optional)
//     [receiver]                # also [receiver.2], [receiver.3], ...
//     C_ret = 10p
//     ...

#include "hbp/analysis.hpp"
#include "hbp/channel.hpp"
#include "hbp/errors.hpp"
#include "hbp/sweep.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace hbp::config {

/// Parses `12`, `0.33m`, `1.5e-12`, `10p`, `5M`.
[[nodiscard]] inline double parse_quantity(const std::string& text, const std::string& key_path) {
    std::string s = text;
    double mult = 1.0;
    if (!s.empty()) {
        switch (s.back()) {
        case 'p': mult = 1e-12; break;
        case 'n': mult = 1e-9; break;
        case 'u': mult = 1e-6; break;
        case 'm': mult = 1e-3; break;
        case 'k': mult = 1e3; break;
        case 'M': mult = 1e6; break;
        default: break;
        }
        if (mult != 1.0) s.pop_back();
    }
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ValidationError(key_path + ": '" + text + "' is not a number with optional suffix p n u m k M");
    }
    return v * mult;
}

struct SweepBlock {
    std::optional<SweepAxis> axis;
    double lo{0.0};
    double hi{0.0};
    std::size_t points{0};
    bool log_spacing{true};

    [[nodiscard]] std::vector<double> grid() const {
        return log_spacing ? logspace(lo, hi, points) : linspace(lo, hi, points);
    }
};

struct OptimizeBlock {
    std::optional<double> r_lo;
    std::optional<double> r_hi;
    std::optional<double> i_limit;
    std::optional<double> f_target;
    bool re_resonate{false};
};

struct SafetyBlock {
    std::string limits_path;  ///< resolved against the config file's directory
    std::optional<double> e_measured;
    std::optional<double> h_measured;
};

struct FitBlock {
    std::optional<std::string> observed_path;
    std::vector<analysis::FitParam> free;
    std::map<analysis::FitParam, double> init;
    double noise{0.0};
    int max_iterations{200};
};

struct TopologyBlock {
    double c_ret_tx{0.0};
    double q{1.0};
    std::optional<double> f_tx;
};

struct ScenarioConfig {
    std::vector<channel::ReceiverParams> receivers;  ///< [receiver] first, then [receiver.N] by N
    std::optional<channel::SourceModel> source;
    std::optional<channel::BodyModel> body;
    std::optional<SweepBlock> sweep;
    std::optional<OptimizeBlock> optimize;
    std::optional<SafetyBlock> safety;
    std::optional<FitBlock> fit;
    std::optional<TopologyBlock> topology;
    std::optional<double> frequency;
    std::uint64_t seed{0};
    std::uint64_t content_hash{0};  ///< FNV-1a 64 of the file bytes

    [[nodiscard]] const channel::ReceiverParams& receiver() const {
        if (receivers.empty()) throw ValidationError("config: [receiver] section is required for this command");
        return receivers.front();
    }
    [[nodiscard]] const channel::SourceModel& src() const {
        if (!source) throw ValidationError("config: [source] section is required for this command");
        return *source;
    }
    [[nodiscard]] const channel::BodyModel& bdy() const {
        if (!body) throw ValidationError("config: [body] section is required for this command");
        return *body;
    }
};

[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {

inline std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i);
}

/// Key/value pairs of one section, consumed as they are read so leftovers can
/// be reported as unknown.
class Section {
public:
    Section(std::string name, std::size_t line) : name_(std::move(name)), line_(line) {}

    void put(const std::string& key, std::string value, std::size_t line) {
        if (values_.count(key)) throw ParseError("duplicate key '" + path(key) + "'", line);
        values_[key] = {std::move(value), line};
    }

    [[nodiscard]] std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    std::optional<std::string> take(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        auto v = it->second.first;
        values_.erase(it);
        return v;
    }

    std::string take_required(const std::string& key) {
        auto v = take(key);
        if (!v) throw ValidationError("config: missing required key '" + path(key) + "'");
        return *v;
    }

    double quantity(const std::string& key) { return parse_quantity(take_required(key), path(key)); }

    std::optional<double> optional_quantity(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        return parse_quantity(*v, path(key));
    }

    void reject_leftovers() const {
        if (!values_.empty()) {
            const auto& [key, v] = *values_.begin();
            throw ValidationError("config: unknown key '" + path(key) + "' (line " + std::to_string(v.second) + ")");
        }
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
    std::size_t line_;
    std::map<std::string, std::pair<std::string, std::size_t>> values_;
};

inline channel::ReceiverParams read_receiver(Section& s) {
    channel::ReceiverParams rx;
    rx.c_ret = s.quantity("C_ret");
    rx.c_gb = s.quantity("C_GB");
    rx.l = s.quantity("L");
    rx.r_l = s.quantity("R_L");
    rx.c_l = s.quantity("C_L");
    rx.r_s = s.quantity("r_s");
    try {
        rx.validate();
    } catch (const Error& e) {
        throw ValidationError("config [" + s.name() + "]: " + e.what());
    }
    return rx;
}

inline Amplitude read_convention(Section& s) {
    const auto v = s.take_required("convention");
    if (v == "pp") return Amplitude::PeakToPeak;
    if (v == "peak") return Amplitude::Peak;
    if (v == "rms") return Amplitude::Rms;
    throw ValidationError("config: " + s.path("convention") + " must be one of pp, peak, rms");
}

inline channel::SourceModel read_source(Section& s) {
    const auto variant = s.take_required("variant");
    const double v_in = s.quantity("V_in");
    const auto conv = read_convention(s);
    channel::SourceModel src;
    if (variant == "grounded") {
        src = channel::grounded(v_in, conv, s.quantity("R_S"));
    } else if (variant == "wearable") {
        src = channel::wearable(v_in, conv, s.quantity("C_ret_tx"));
    } else if (variant == "resonant-wearable") {
        const double c = s.quantity("C_ret_tx");
        src = channel::resonant_wearable(v_in, conv, c, s.quantity("Q"));
    } else {
        throw ValidationError("config: " + s.path("variant") + " must be grounded, wearable or resonant-wearable");
    }
    try {
        src.validate();
    } catch (const Error& e) {
        throw ValidationError(std::string("config [source]: ") + e.what());
    }
    return src;
}

inline bool read_bool(Section& s, const std::string& key, bool fallback) {
    const auto v = s.take(key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    throw ValidationError("config: " + s.path(key) + " must be true or false");
}

inline std::uint64_t read_u64(const std::string& text, const std::string& key_path) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw ValidationError("config: " + key_path + " must be a non-negative integer");
    }
    return v;
}

}  // namespace detail

/// Parses scenario text. `base_dir` resolves relative file paths.
[[nodiscard]] inline ScenarioConfig parse_scenario(const std::string& text,
                                                   const std::filesystem::path& base_dir = {}) {
    using detail::Section;
    std::vector<Section> sections;
    sections.emplace_back("", 0);
    std::set<std::string> seen_sections;

    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = detail::trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", lineno);
            const std::string name = detail::trim(line.substr(1, line.size() - 2));
            if (!seen_sections.insert(name).second) throw ParseError("duplicate section [" + name + "]", lineno);
            sections.emplace_back(name, lineno);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw ParseError("empty key or value", lineno);
        sections.back().put(key, value, lineno);
    }

    ScenarioConfig cfg;
    cfg.content_hash = fnv1a64(text);
    std::map<unsigned long, channel::ReceiverParams> extra_receivers;

    for (auto& s : sections) {
        const std::string& name = s.name();
        if (name.empty()) {
            if (auto v = s.take("seed")) cfg.seed = detail::read_u64(*v, "seed");
            cfg.frequency = s.optional_quantity("frequency");
        } else if (name == "receiver") {
            cfg.receivers.insert(cfg.receivers.begin(), detail::read_receiver(s));
        } else if (name.rfind("receiver.", 0) == 0) {
            const std::string idx = name.substr(9);
            unsigned long n = 0;
            const auto res = std::from_chars(idx.data(), idx.data() + idx.size(), n);
            if (idx.empty() || res.ec != std::errc{} || res.ptr != idx.data() + idx.size()) {
                throw ValidationError("config: unknown section [" + name + "]");
            }
            extra_receivers[n] = detail::read_receiver(s);
        } else if (name == "source") {
            cfg.source = detail::read_source(s);
        } else if (name == "body") {
            channel::BodyModel b;
            b.c_b = s.quantity("C_B");
            b.r_b = s.quantity("R_B");
            try {
                b.validate();
            } catch (const Error& e) {
                throw ValidationError(std::string("config [body]: ") + e.what());
            }
            cfg.body = b;
        } else if (name == "sweep") {
            SweepBlock sw;
            if (auto a = s.take("axis")) {
                sw.axis = parse_axis(*a);
                if (!sw.axis) throw ValidationError("config: sweep.axis must be frequency, load, inductance or input_voltage");
            }
            sw.lo = s.quantity("lo");
            sw.hi = s.quantity("hi");
            sw.points = detail::read_u64(s.take_required("points"), "sweep.points");
            const auto spacing = s.take_required("spacing");
            if (spacing != "lin" && spacing != "log") throw ValidationError("config: sweep.spacing must be lin or log");
            sw.log_spacing = spacing == "log";
            if (!(sw.lo > 0.0) || !(sw.hi > sw.lo) || sw.points < 1) {
                throw ValidationError("config: sweep needs 0 < lo < hi and points >= 1");
            }
            cfg.sweep = sw;
        } else if (name == "optimize") {
            OptimizeBlock o;
            o.r_lo = s.optional_quantity("R_lo");
            o.r_hi = s.optional_quantity("R_hi");
            o.i_limit = s.optional_quantity("I_limit");
            o.f_target = s.optional_quantity("f_target");
            o.re_resonate = detail::read_bool(s, "re_resonate", false);
            cfg.optimize = o;
        } else if (name == "safety") {
            SafetyBlock sb;
            std::filesystem::path p = s.take_required("limits");
            if (p.is_relative()) p = base_dir / p;
            sb.limits_path = p.string();
            if (!std::filesystem::exists(p)) throw ValidationError("config: safety.limits file '" + sb.limits_path + "' does not exist");
            sb.e_measured = s.optional_quantity("e_measured");
            sb.h_measured = s.optional_quantity("h_measured");
            cfg.safety = sb;
        } else if (name == "fit") {
            FitBlock fb;
            if (auto obs = s.take("observed")) {
                std::filesystem::path p = *obs;
                if (p.is_relative()) p = base_dir / p;
                if (!std::filesystem::exists(p)) throw ValidationError("config: fit.observed file '" + p.string() + "' does not exist");
                fb.observed_path = p.string();
            }
            std::istringstream list(s.take_required("free"));
            for (std::string item; std::getline(list, item, ',');) {
                item = detail::trim(item);
                const auto p = analysis::parse_fit_param(item);
                if (!p) throw ValidationError("config: fit.free entry '" + item + "' must be one of C_ret, C_GB, r_s, L");
                fb.free.push_back(*p);
                fb.init[*p] = s.quantity("init_" + item);
            }
            if (auto n = s.optional_quantity("noise")) fb.noise = *n;
            if (auto it = s.take("max_iterations")) {
                fb.max_iterations = static_cast<int>(detail::read_u64(*it, "fit.max_iterations"));
            }
            cfg.fit = fb;
        } else if (name == "topology") {
            TopologyBlock t;
            t.c_ret_tx = s.quantity("C_ret_tx");
            t.q = s.quantity("Q");
            t.f_tx = s.optional_quantity("f_tx");
            cfg.topology = t;
        } else {
            throw ValidationError("config: unknown section [" + name + "]");
        }
        s.reject_leftovers();
    }
    for (auto& [n, rx] : extra_receivers) cfg.receivers.push_back(rx);
    if (!cfg.receivers.empty() && !seen_sections.count("receiver")) {
        throw ValidationError("config: [receiver.N] sections require a primary [receiver]");
    }
    return cfg;
}

[[nodiscard]] inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), std::filesystem::path(path).parent_path());
}

}  // namespace hbp::config
