// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "hbp/acnet.hpp"
#include "hbp/analysis.hpp"
#include "hbp/channel.hpp"
#include "hbp/channel_netlist.hpp"
#include "hbp/cli.hpp"
#include "hbp/csv.hpp"
#include "hbp/optimize.hpp"
#include "hbp/safety.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace hbp;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(HBP_SOURCE_DIR) / "scenarios";
const double kVpp12 = 12.0 / (2.0 * std::sqrt(2.0));

struct Outcome {
    bool pass{false};
    std::string detail;
};

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string cli_run(const std::string& command, const std::string& scn, cli::Options opt = {}) {
    opt.command = command;
    opt.config_path = (kScenarios / scn).string();
    std::ostringstream out, err;
    const int code = cli::run(opt, out, err);
    if (code != 0) throw std::runtime_error(command + " " + scn + " exited " + std::to_string(code) + ": " + err.str());
    return out.str();
}

SweepResult cli_sweep(const std::string& command, const std::string& scn, SweepAxis axis, cli::Options opt = {}) {
    std::istringstream in(cli_run(command, scn, opt));
    return csv::import_measured(in, axis).sweep;
}

double logu(std::mt19937_64& rng, double lo, double hi) {
    return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

Outcome resonance_reproduction() {
    const double c_total = analysis::fit_total_capacitance(0.33e-3, 1.6e6);
    const bool c_ok = std::abs(c_total - 30.0e-12) < 0.05e-12;
    cli::Options opt;
    opt.points = 10000;
    const auto t0 = std::chrono::steady_clock::now();
    const auto sweep = cli_sweep("sweep-freq", "resonance.scn", SweepAxis::Frequency, opt);
    const double elapsed = seconds_since(t0);
    const auto peak = analysis::find_resonant_peak(sweep);
    const double err = std::abs(peak.f_peak - 1.6e6) / 1.6e6;
    return {c_ok && err < 0.01 && !peak.window_truncated && elapsed < 1.0,
            "C_total " + num(c_total * 1e12) + " pF, peak " + num(peak.f_peak) + " Hz (" + num(err * 100) +
                "% off), 1e4 points in " + num(elapsed) + " s"};
}

Outcome oracle_equivalence() {
    std::mt19937_64 rng(20240601);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        channel::ReceiverParams rx{logu(rng, 0.1e-12, 50e-12), draw % 4 == 0 ? 0.0 : logu(rng, 0.1e-12, 50e-12),
                                   draw % 10 == 0 ? 0.0 : logu(rng, 1e-6, 10e-3), logu(rng, 10.0, 1e5),
                                   draw % 3 == 0 ? 0.0 : logu(rng, 0.1e-12, 10e-12),
                                   draw % 2 == 0 ? logu(rng, 1.0, 5e3) : 0.0};
        const auto net = acnet::build_receiver_netlist(rx, 1.0);
        for (int k = 0; k < 20; ++k) {
            const double f = logu(rng, 10e3, 30e6);
            const Complex h = channel::transfer_function(rx, f);
            const Complex v = acnet::solve(net, f).probe_voltage;
            worst = std::max(worst, std::abs(v - h) / std::abs(h));
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst < 1e-9 && elapsed < 5.0, "worst relative difference " + num(worst) + " in " + num(elapsed) + " s"};
}

Outcome resonant_gain_identity() {
    std::mt19937_64 rng(31337);
    double worst = 0.0;
    int cases = 0;
    for (double r_l : {100.0, 1000.0, 10000.0}) {
        for (double c_l : {0.0, 1e-12}) {
            for (int i = 0; i < 200; ++i) {
                channel::ReceiverParams rx{logu(rng, 0.1e-12, 100e-12), logu(rng, 0.01e-12, 100e-12),
                                           logu(rng, 1e-6, 10e-3), r_l, c_l, 0.0};
                const double h = std::abs(channel::transfer_function(rx, channel::resonant_frequency(rx)));
                worst = std::max(worst, std::abs(h - channel::resonant_gain(rx)));
                ++cases;
            }
        }
    }
    return {worst < 1e-9, std::to_string(cases) + " draws, worst |error| " + num(worst)};
}

Outcome load_optimum() {
    const std::string out = cli_run("optimize-load", "load_match.scn");
    std::istringstream in(out);
    std::string line, last;
    while (std::getline(in, line)) last = line;
    double r_opt = 0.0;
    const bool parsed = csv::parse_double(csv::split(last).at(0), r_opt);

    const auto sweep = cli_sweep("sweep-load", "load_match.scn", SweepAxis::Load);
    int turns = 0;
    for (std::size_t i = 2; i < sweep.rows.size(); ++i) {
        const double d1 = sweep.rows[i - 1].p_out_rms - sweep.rows[i - 2].p_out_rms;
        const double d2 = sweep.rows[i].p_out_rms - sweep.rows[i - 1].p_out_rms;
        if ((d1 > 0) != (d2 > 0)) ++turns;
    }
    const double err = std::abs(r_opt - 1e3) / 1e3;
    return {parsed && err < 1e-3 && turns == 1,
            "R_L opt " + num(r_opt) + " ohm (" + num(err * 100) + "% off), load sweep turns " + std::to_string(turns)};
}

double power_at_12(const SweepResult& s) { return s.rows.back().p_out_rms; }

double loglog_slope(const SweepResult& s) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : s.rows) {
        const double x = std::log(r.axis), y = std::log(r.p_out_rms);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double n = static_cast<double>(s.rows.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome power_endpoints() {
    const std::vector<std::pair<std::string, double>> cases{{"rx3.scn", 2.10e-3}, {"rx2.scn", 531e-6}, {"rx1.scn", 135e-6}};
    bool ok = true;
    std::string detail;
    for (const auto& [scn, target] : cases) {
        const auto s = cli_sweep("sweep-vin", scn, SweepAxis::InputVoltage);
        const double p = power_at_12(s);
        const double slope = loglog_slope(s);
        const bool good = s.rows.back().axis == 12.0 && std::abs(p - target) / target < 0.05 && std::abs(slope - 2.0) < 0.01;
        ok = ok && good;
        detail += scn.substr(0, 3) + " " + num(p * 1e6) + " uW slope " + num(slope) + "; ";
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome ratio_checks() {
    const double p1 = power_at_12(cli_sweep("sweep-vin", "rx1.scn", SweepAxis::InputVoltage));
    const double p2 = power_at_12(cli_sweep("sweep-vin", "rx2.scn", SweepAxis::InputVoltage));
    const double p3 = power_at_12(cli_sweep("sweep-vin", "rx3.scn", SweepAxis::InputVoltage));
    const double r32 = p3 / p2;
    const double r31 = p3 / p1;
    return {r32 >= 3.75 && r32 <= 4.15 && r31 > 10.0,
            "Rx3/Rx2 power " + num(r32) + "x, Rx3/Rx1 power " + num(r31) + "x"};
}

Outcome topology_ordering() {
    const channel::ReceiverParams rx{1e-12, 5e-12, 4.222e-3, 1e3, 0.0, 0.0};
    const channel::BodyModel body{100e-12, 0.0};
    const double c_ret_tx = 1e-12;
    const double f0 = channel::resonant_frequency(rx);
    const auto curves = optimize::compare_topologies(rx, body, {f0}, c_ret_tx, 10.0);
    const double m2m = curves[0].rows[0].gain_db, m2w = curves[1].rows[0].gain_db, w2w = curves[2].rows[0].gain_db;
    const double ratio = std::pow(10.0, (m2w - w2w) / 20.0);
    const double expect = (body.c_b + c_ret_tx) / c_ret_tx;
    const double err = std::abs(ratio - expect) / expect;
    return {m2m >= m2w && m2w >= w2w && err < 1e-9,
            "M2M " + num(m2m) + " dB, M2W " + num(m2w) + " dB, W2W " + num(w2w) + " dB, M2W/W2W " + num(ratio)};
}

Outcome fit_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    Scenario truth;
    truth.rx = {10e-12, 20e-12, 0.33e-3, 1e3, 0.0, 200.0};
    truth.src = channel::grounded(5.0, Amplitude::PeakToPeak);
    truth.body = {150e-12, 0.0};
    const double f0 = channel::resonant_frequency(truth.rx);
    const auto clean = simulate_sweep(truth, SweepAxis::Frequency, logspace(f0 / 2.0, f0 * 2.0, 41));
    const std::vector<analysis::FitParam> free{analysis::FitParam::CRet, analysis::FitParam::CGb};
    const std::map<analysis::FitParam, double> init{{analysis::FitParam::CRet, 15e-12}, {analysis::FitParam::CGb, 10e-12}};

    auto rel_err = [&](const analysis::FitReport& r) {
        return std::max(std::abs(r.receiver.c_ret / truth.rx.c_ret - 1.0), std::abs(r.receiver.c_gb / truth.rx.c_gb - 1.0));
    };
    const double clean_err = rel_err(analysis::fit_params(clean, free, truth, init));

    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.01);
        auto obs = clean;
        obs.model = nullptr;
        for (auto& r : obs.rows) r.p_out_rms *= 1.0 + noise(rng);
        errs.push_back(rel_err(analysis::fit_params(obs, free, truth, init)));
    }
    std::sort(errs.begin(), errs.end());
    const double p95 = errs[static_cast<std::size_t>(std::ceil(0.95 * errs.size())) - 1];
    const double elapsed = seconds_since(t0);
    return {clean_err < 0.005 && p95 < 0.05 && elapsed < 30.0,
            "noise-free error " + num(clean_err * 100) + "%, 1% noise p95 " + num(p95 * 100) + "% over 50 seeds, " +
                num(elapsed) + " s"};
}

Outcome safety_inversion() {
    std::istringstream table_text(
        "source_label acceptance table\n"
        "band 100e3 1e6 40\n"
        "band 1e6 10e6 20\n"
        "band 10e6 30e6 20\n");
    const auto table = safety::parse_limit_table(table_text);
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto conv = static_cast<Amplitude>(i % 3);
        const double v = logu(rng, 0.1, 50.0);
        channel::SourceModel src = i % 3 == 0   ? channel::grounded(v, conv)
                                   : i % 3 == 1 ? channel::wearable(v, conv, logu(rng, 0.5e-12, 5e-12))
                                                : channel::resonant_wearable(v, conv, logu(rng, 0.5e-12, 5e-12),
                                                                             logu(rng, 1.5, 30.0));
        const channel::BodyModel body{logu(rng, 50e-12, 300e-12), 0.0};
        const double f = logu(rng, 150e3, 29e6);
        const double vmax = safety::max_safe_input(body, f, table, src);
        const auto r = safety::check({src.with_v_in(vmax), body, f, std::nullopt, std::nullopt}, table);
        worst = std::max(worst, std::abs(r.margin - 1.0));
    }
    const double i = safety::contact_current(channel::grounded(12.0, Amplitude::PeakToPeak), {150e-12, 0.0}, 1.747e6);
    const double oracle = 2.0 * M_PI * 1.747e6 * 150e-12 * kVpp12;
    const double err = std::abs(i - oracle) / oracle;
    const double err_stated = std::abs(i - 6.99e-3) / 6.99e-3;
    return {worst < 1e-9 && err < 1e-12 && err_stated < 1e-3,
            "worst |margin - 1| " + num(worst) + ", contact current " + num(i * 1e3) + " mA rms"};
}

Outcome determinism() {
    const std::vector<std::pair<std::string, std::string>> runs{
        {"sweep-freq", "resonance.scn"},    {"resonance", "resonance.scn"},        {"sweep-load", "load_match.scn"},
        {"optimize-load", "load_match.scn"}, {"sweep-vin", "rx1.scn"},          {"sweep-vin", "rx2.scn"},
        {"sweep-vin", "rx3.scn"},       {"safety", "safety_example.scn"},  {"max-safe-vin", "safety_example.scn"},
        {"multi", "multi.scn"},         {"compare-topologies", "topology.scn"}, {"fit", "fit.scn"},
        {"oracle-check", "oracle.scn"}};
    int same = 0;
    for (const auto& [cmd, scn] : runs) {
        if (cli_run(cmd, scn) == cli_run(cmd, scn)) ++same;
    }
    return {same == static_cast<int>(runs.size()),
            std::to_string(same) + "/" + std::to_string(runs.size()) + " scenario runs byte-identical"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"resonance reproduction", resonance_reproduction},
        {"oracle equivalence", oracle_equivalence},
        {"resonant-gain identity", resonant_gain_identity},
        {"load-optimum reproduction", load_optimum},
        {"power endpoints", power_endpoints},
        {"power ratios", ratio_checks},
        {"topology ordering", topology_ordering},
        {"fit recovery", fit_recovery},
        {"safety inversion", safety_inversion},
        {"determinism", determinism},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << index << ". " << name << ": " << o.detail << '\n';
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed\n";
    return failed == 0 ? 0 : 1;
}
