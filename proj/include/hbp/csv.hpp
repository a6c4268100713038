#pragma once

// Result tables and the sweep CSV schema:
//
//     <axis>[<unit>],v_o_re[V],v_o_im[V],v_o_mag[V],p_out_rms[W]
//
// '.' decimal point, no thousands separators, LF endings. Lines starting
// with '#' carry provenance and are ignored on import. Power-only files use
// the two columns `<axis>[<unit>],p_out_rms[W]` (or a literal `axis` header).

#include "hbp/errors.hpp"
#include "hbp/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace hbp::csv {

/// Shortest decimal text that reads back to exactly `v`.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[nodiscard]] inline bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

[[nodiscard]] inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Rectangular table of decimal values with a provenance header.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> provenance;  ///< emitted as `# ` lines
    std::vector<std::string> notes;       ///< emitted as `# note: ` lines

    void validate() const {
        std::set<std::string> seen;
        for (const auto& c : columns) {
            if (!seen.insert(c).second) throw DomainError("result table: duplicate column '" + c + "'");
        }
        for (const auto& r : rows) {
            if (r.size() != columns.size()) throw DomainError("result table: ragged row");
        }
    }

    void write_csv(std::ostream& os) const {
        validate();
        for (const auto& p : provenance) os << "# " << p << '\n';
        for (const auto& n : notes) os << "# note: " << n << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
        os << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
            os << '\n';
        }
    }

    /// gnuplot-friendly: one two-column block per trace (column k vs column 0),
    /// blocks separated by two blank lines.
    void write_plot_data(std::ostream& os) const {
        validate();
        for (const auto& p : provenance) os << "# " << p << '\n';
        for (std::size_t k = 1; k < columns.size(); ++k) {
            if (k > 1) os << "\n\n";
            os << "# trace " << columns[k] << " vs " << columns[0] << '\n';
            for (const auto& r : rows) os << format_double(r[0]) << ' ' << format_double(r[k]) << '\n';
        }
    }
};

[[nodiscard]] inline std::string axis_column(SweepAxis a) {
    const auto info = axis_info(a);
    return std::string(info.name) + "[" + std::string(info.unit) + "]";
}

inline const std::vector<std::string>& sweep_value_columns() {
    static const std::vector<std::string> cols{"v_o_re[V]", "v_o_im[V]", "v_o_mag[V]", "p_out_rms[W]"};
    return cols;
}

/// Sweep rows in the full five-column schema.
[[nodiscard]] inline ResultTable sweep_table(const SweepResult& s) {
    ResultTable t;
    t.columns.push_back(axis_column(s.axis));
    for (const auto& c : sweep_value_columns()) t.columns.push_back(c);
    for (const auto& r : s.rows) {
        const Complex v = r.v_o.value_or(Complex{});
        t.rows.push_back({r.axis, v.real(), v.imag(), std::abs(v), r.p_out_rms});
    }
    return t;
}

struct ImportResult {
    SweepResult sweep;
    std::vector<std::string> warnings;
};

/// Reads a measured or exported sweep for the declared axis.
[[nodiscard]] inline ImportResult import_measured(std::istream& in, SweepAxis axis) {
    ImportResult out;
    out.sweep.axis = axis;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    bool power_only = false;
    std::vector<std::size_t> row_lines;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto cells = split(line);
        if (!have_header) {
            have_header = true;
            const std::string& first = cells.front();
            if (first != "axis" && first != axis_column(axis)) {
                throw ParseError("axis column '" + first + "' does not match declared axis '" + axis_column(axis) +
                                     "'",
                                 lineno);
            }
            if (cells.size() == 2 && cells[1] == "p_out_rms[W]") {
                power_only = true;
            } else if (cells.size() == 5 && std::equal(cells.begin() + 1, cells.end(), sweep_value_columns().begin())) {
                power_only = false;
            } else {
                throw ParseError("unrecognised header '" + line + "'", lineno);
            }
            continue;
        }
        const std::size_t expected = power_only ? 2 : 5;
        if (cells.size() != expected) {
            throw ParseError("expected " + std::to_string(expected) + " fields, got " + std::to_string(cells.size()),
                             lineno);
        }
        std::vector<double> v(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (!parse_double(cells[i], v[i])) throw ParseError("malformed number '" + cells[i] + "'", lineno);
        }
        if (!(v[0] > 0.0)) throw ParseError("axis value must be positive", lineno);
        SweepRow row;
        row.axis = v[0];
        if (power_only) {
            row.p_out_rms = v[1];
        } else {
            row.v_o = Complex(v[1], v[2]);
            row.p_out_rms = v[4];
        }
        if (!(row.p_out_rms >= 0.0)) throw ParseError("power must be non-negative", lineno);
        out.sweep.rows.push_back(row);
        row_lines.push_back(lineno);
    }
    if (!have_header) throw ParseError("missing header line", 0);
    if (out.sweep.rows.size() < 2) throw ParseError("need at least 2 data rows", 0);

    auto& rows = out.sweep.rows;
    if (!std::is_sorted(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.axis < b.axis; })) {
        std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.axis < b.axis; });
        out.warnings.emplace_back("rows were not sorted by axis; re-sorted ascending");
    }
    std::vector<double> dups;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].axis == rows[i - 1].axis && (dups.empty() || dups.back() != rows[i].axis)) dups.push_back(rows[i].axis);
    }
    if (!dups.empty()) {
        std::string msg = "duplicate axis values:";
        for (double d : dups) msg += " " + format_double(d);
        throw ParseError(msg, 0);
    }
    return out;
}

[[nodiscard]] inline ImportResult import_measured(const std::string& path, SweepAxis axis) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open measured data '" + path + "'");
    return import_measured(in, axis);
}

}  // namespace hbp::csv
