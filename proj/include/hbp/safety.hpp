#pragma once

// Contact-current estimation and compliance checks against frequency-banded
// exposure-limit tables loaded from config. No limit values are built in.

#include "hbp/acnet.hpp"
#include "hbp/channel.hpp"
#include "hbp/channel_netlist.hpp"
#include "hbp/errors.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hbp::safety {

struct LimitBand {
    double f_lo{0.0};  ///< inclusive
    double f_hi{0.0};  ///< exclusive
    std::optional<double> contact_current;  ///< A rms
    std::optional<double> e_field;          ///< V/m
    std::optional<double> h_field;          ///< A/m
};

class LimitTable {
public:
    LimitTable() = default;
    LimitTable(std::string source_label, std::vector<LimitBand> bands)
        : source_label_(std::move(source_label)), bands_(std::move(bands)) {
        validate();
    }

    [[nodiscard]] const std::string& source_label() const noexcept { return source_label_; }
    [[nodiscard]] const std::vector<LimitBand>& bands() const noexcept { return bands_; }

    [[nodiscard]] const LimitBand& band_for(double f_hz) const {
        for (const auto& b : bands_) {
            if (f_hz >= b.f_lo && f_hz < b.f_hi) return b;
        }
        std::ostringstream msg;
        msg << "frequency " << f_hz << " Hz is not covered by limit table '" << source_label_ << "'";
        throw UncoveredBandError(msg.str());
    }

private:
    void validate() const {
        if (source_label_.empty()) throw ParseError("limit table requires a source_label", 0);
        for (std::size_t i = 0; i < bands_.size(); ++i) {
            const auto& b = bands_[i];
            if (!(b.f_lo >= 0.0) || !(b.f_hi > b.f_lo)) {
                throw ParseError("band " + std::to_string(i) + " has an empty frequency range", 0);
            }
            if (i > 0 && b.f_lo < bands_[i - 1].f_hi) {
                throw ParseError("bands must be sorted and non-overlapping (band " + std::to_string(i) + ")", 0);
            }
            for (const auto& v : {b.contact_current, b.e_field, b.h_field}) {
                if (v && !(*v > 0.0)) throw ParseError("limits must be > 0 (band " + std::to_string(i) + ")", 0);
            }
        }
    }

    std::string source_label_;
    std::vector<LimitBand> bands_;
};

/// Parses the line-oriented limit format:
///
///     source_label <free text>
///     band <f_lo_hz> <f_hi_hz> <contact_mA_rms> [e_V_per_m] [h_A_per_m]
///
/// `#` starts a comment. `-` marks an absent limit.
[[nodiscard]] inline LimitTable parse_limit_table(std::istream& in) {
    std::string label;
    std::vector<LimitBand> bands;
    std::string line;
    std::size_t lineno = 0;
    auto number = [&](const std::string& tok) -> std::optional<double> {
        if (tok == "-") return std::nullopt;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || !std::isfinite(v)) throw ParseError("bad number '" + tok + "'", lineno);
        return v;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "source_label") {
            std::getline(ls >> std::ws, label);
            while (!label.empty() && std::isspace(static_cast<unsigned char>(label.back()))) label.pop_back();
            if (label.empty()) throw ParseError("empty source_label", lineno);
        } else if (key == "band") {
            std::vector<std::string> tok;
            for (std::string t; ls >> t;) tok.push_back(t);
            if (tok.size() < 3 || tok.size() > 5) {
                throw ParseError("band needs f_lo f_hi contact_mA [e] [h]", lineno);
            }
            LimitBand b;
            const auto lo = number(tok[0]);
            const auto hi = number(tok[1]);
            if (!lo || !hi) throw ParseError("band frequency bounds are required", lineno);
            b.f_lo = *lo;
            b.f_hi = *hi;
            if (auto c = number(tok[2])) b.contact_current = *c * 1e-3;
            if (tok.size() > 3) b.e_field = number(tok[3]);
            if (tok.size() > 4) b.h_field = number(tok[4]);
            bands.push_back(b);
        } else {
            throw ParseError("unknown directive '" + key + "'", lineno);
        }
    }
    if (label.empty()) throw ParseError("limit table requires a source_label line", 0);
    return {label, std::move(bands)};
}

[[nodiscard]] inline LimitTable load_limit_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open limit table '" + path + "'");
    return parse_limit_table(in);
}

/// Body return current through C_B, I = 2 pi f C_B V_B (rms). Used as a
/// conservative stand-in for the contact current through one foot.
[[nodiscard]] inline double contact_current(const channel::SourceModel& src, const channel::BodyModel& body,
                                            double f_hz) {
    const double v_b = channel::body_potential(src, body, f_hz);
    return angular(f_hz) * body.c_b * v_b;
}

/// The C_B branch current from a full network solve, optionally with receivers attached.
[[nodiscard]] inline double contact_current_network(const channel::SourceModel& src, const channel::BodyModel& body,
                                                    double f_hz,
                                                    const std::vector<channel::ReceiverParams>& receivers = {}) {
    const auto built = acnet::build_multi_receiver_netlist(receivers, src, body);
    const auto sol = acnet::solve(built.netlist, f_hz);
    const auto* cb = built.netlist.find(acnet::names::kBodyC);
    return std::abs(sol.branch_current(*cb));
}

struct FieldCheck {
    std::string name;
    double measured{0.0};
    double limit{0.0};
    bool pass{false};
};

struct SafetyInputs {
    channel::SourceModel src;
    channel::BodyModel body;
    double frequency{0.0};
    std::optional<double> e_field_measured;  ///< V/m
    std::optional<double> h_field_measured;  ///< A/m
};

struct SafetyReport {
    double frequency{0.0};
    double contact_current_rms{0.0};
    double limit{0.0};
    double margin{0.0};  ///< limit / actual
    bool pass{false};
    std::vector<FieldCheck> field_checks;
    std::vector<std::string> notes;
};

[[nodiscard]] inline SafetyReport check(const SafetyInputs& in, const LimitTable& table) {
    const auto& band = table.band_for(in.frequency);
    if (!band.contact_current) {
        throw IncompleteTableError("limit table '" + table.source_label() + "' has no contact-current limit for the band");
    }
    SafetyReport r;
    r.frequency = in.frequency;
    r.contact_current_rms = contact_current(in.src, in.body, in.frequency);
    r.limit = *band.contact_current;
    r.margin = r.contact_current_rms > 0.0 ? r.limit / r.contact_current_rms : std::numeric_limits<double>::infinity();
    r.pass = r.contact_current_rms <= r.limit;

    auto field = [&](const char* name, const std::optional<double>& measured, const std::optional<double>& limit) {
        if (!measured) return;
        if (!limit) {
            r.notes.push_back(std::string(name) + " measured but the table has no limit for this band; not evaluated");
            return;
        }
        FieldCheck fc{name, *measured, *limit, *measured <= *limit};
        r.pass = r.pass && fc.pass;
        r.field_checks.push_back(std::move(fc));
    };
    field("e_field", in.e_field_measured, band.e_field);
    field("h_field", in.h_field_measured, band.h_field);

    r.notes.emplace_back("limits from: " + table.source_label());
    r.notes.emplace_back("contact current is the full body return current through C_B (upper bound on one-foot current)");
    r.notes.emplace_back("basic restrictions (SAR, induced fields) not evaluated");
    return r;
}

/// Largest source amplitude, in `src`'s own convention, whose contact current
/// equals the band limit.
[[nodiscard]] inline double max_safe_input(const channel::BodyModel& body, double f_hz, const LimitTable& table,
                                           const channel::SourceModel& src) {
    const auto& band = table.band_for(f_hz);
    if (!band.contact_current) {
        throw IncompleteTableError("limit table '" + table.source_label() + "' has no contact-current limit for the band");
    }
    const double i_now = contact_current(src, body, f_hz);
    return src.v_in() * (*band.contact_current / i_now);
}

}  // namespace hbp::safety
