#include "hbp/cli.hpp"
#include "hbp/csv.hpp"
#include "hbp/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hbp;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(HBP_SOURCE_DIR) / "scenarios";

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::string& command, const std::string& config, cli::Options opt = {}) {
    opt.command = command;
    opt.config_path = config;
    std::ostringstream out, err;
    const int code = cli::run(opt, out, err);
    return {code, out.str(), err.str()};
}

Run run_scn(const std::string& command, const std::string& name, cli::Options opt = {}) {
    return run(command, (kScenarios / name).string(), opt);
}

fs::path scratch(const std::string& name, const std::string& text) {
    const auto dir = fs::temp_directory_path() / "hbp_test_cli";
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p;
}

const std::string kReceiver =
    "[receiver]\nC_ret = 10p\nC_GB = 20p\nL = 0.33m\nR_L = 1k\nC_L = 0\nr_s = 0\n";
const std::string kSource = "[source]\nvariant = grounded\nV_in = 5\nconvention = pp\nR_S = 0\n";
const std::string kBody = "[body]\nC_B = 150p\nR_B = 0\n";

}  // namespace

TEST_CASE("quantities with suffixes", "[cli][config]") {
    CHECK(config::parse_quantity("0.33m", "k") == Approx(0.33e-3));
    CHECK(config::parse_quantity("1.747M", "k") == Approx(1.747e6));
    CHECK(config::parse_quantity("150p", "k") == Approx(150e-12));
    CHECK(config::parse_quantity("1e-12", "k") == 1e-12);
    CHECK_THROWS_AS(config::parse_quantity("12V", "k"), ValidationError);
    CHECK_THROWS_AS(config::parse_quantity("", "k"), ValidationError);
}

TEST_CASE("config validation", "[cli][config]") {
    CHECK_NOTHROW(config::parse_scenario(kReceiver + kSource + kBody));
    CHECK_THROWS_AS(config::parse_scenario(kReceiver + "colour = red\n"), ValidationError);
    CHECK_THROWS_AS(config::parse_scenario("[receiver]\nC_ret = 1p\n"), ValidationError);
    CHECK_THROWS_AS(config::parse_scenario(kReceiver + "[nonsense]\n"), ValidationError);
    CHECK_THROWS_AS(config::parse_scenario(kReceiver + kReceiver), ParseError);
    CHECK_THROWS_AS(config::parse_scenario("[receiver\n"), ParseError);
    CHECK_THROWS_AS(config::parse_scenario("just words\n"), ParseError);
    CHECK_THROWS_AS(config::parse_scenario("[source]\nvariant = magic\nV_in = 1\nconvention = pp\n"), ValidationError);
    CHECK_THROWS_AS(config::parse_scenario("[source]\nvariant = grounded\nV_in = 1\nconvention = volts\nR_S = 0\n"),
                    ValidationError);
    CHECK_THROWS_AS(config::parse_scenario("[receiver.1]\nC_ret = 1p\nC_GB = 0\nL = 0\nR_L = 1k\nC_L = 0\nr_s = 0\n"),
                    ValidationError);
    CHECK_THROWS_AS(config::parse_scenario("[receiver]\nC_ret = 1p\nC_GB = 0\nL = 0\nR_L = 0\nC_L = 0\nr_s = 0\n"),
                    ValidationError);

    try {
        (void)config::parse_scenario(kReceiver + "[sweep]\nlo = 1\nhi = 2\npoints = 3\nspacing = log\nstep = 4\n");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("sweep.step") != std::string::npos);
    }

    const auto a = config::parse_scenario(kReceiver);
    const auto b = config::parse_scenario(kReceiver + "\n");
    CHECK(a.content_hash != b.content_hash);
}

TEST_CASE("every shipped scenario runs", "[cli][scenarios]") {
    const std::vector<std::pair<std::string, std::string>> runs{
        {"sweep-freq", "resonance.scn"},   {"resonance", "resonance.scn"},       {"sweep-load", "load_match.scn"},
        {"optimize-load", "load_match.scn"}, {"sweep-vin", "rx1.scn"},        {"sweep-vin", "rx2.scn"},
        {"sweep-vin", "rx3.scn"},      {"safety", "safety_example.scn"}, {"max-safe-vin", "safety_example.scn"},
        {"multi", "multi.scn"},        {"compare-topologies", "topology.scn"}, {"fit", "fit.scn"},
        {"oracle-check", "oracle.scn"}};
    for (const auto& [cmd, file] : runs) {
        INFO(cmd << " " << file);
        const auto r = run_scn(cmd, file);
        CHECK(r.code == 0);
        CHECK(r.err.empty());
        CHECK(r.out.rfind("# hbp 1.0.0\n# command: " + cmd + "\n# config_fnv1a64: ", 0) == 0);
    }
}

TEST_CASE("sweep output re-imports exactly", "[cli][csv]") {
    for (const auto& [cmd, file, axis] : {std::tuple{"sweep-freq", "resonance.scn", SweepAxis::Frequency},
                                          std::tuple{"sweep-load", "load_match.scn", SweepAxis::Load},
                                          std::tuple{"sweep-vin", "rx2.scn", SweepAxis::InputVoltage}}) {
        const auto r = run_scn(cmd, file);
        REQUIRE(r.code == 0);
        std::istringstream in(r.out);
        const auto imported = csv::import_measured(in, axis);
        CHECK(imported.warnings.empty());

        const auto cfg = config::load_scenario((kScenarios / file).string());
        Scenario s{cfg.receiver(), cfg.src(), cfg.bdy(), cfg.frequency.value_or(channel::resonant_frequency(cfg.receiver()))};
        const auto expect = simulate_sweep(s, axis, cfg.sweep->grid());
        REQUIRE(imported.sweep.rows.size() == expect.rows.size());
        for (std::size_t i = 0; i < expect.rows.size(); ++i) {
            CHECK(imported.sweep.rows[i].axis == expect.rows[i].axis);
            CHECK(*imported.sweep.rows[i].v_o == *expect.rows[i].v_o);
            CHECK(imported.sweep.rows[i].p_out_rms == expect.rows[i].p_out_rms);
        }
    }
}

TEST_CASE("network-backed sweep agrees with the closed form", "[cli][oracle]") {
    cli::Options opt;
    opt.oracle = true;
    const auto net = run_scn("sweep-freq", "resonance.scn", opt);
    const auto closed = run_scn("sweep-freq", "resonance.scn");
    REQUIRE(net.code == 0);
    std::istringstream a(net.out), b(closed.out);
    const auto sa = csv::import_measured(a, SweepAxis::Frequency).sweep;
    const auto sb = csv::import_measured(b, SweepAxis::Frequency).sweep;
    for (std::size_t i = 0; i < sa.rows.size(); ++i) {
        CHECK(std::abs(*sa.rows[i].v_o - *sb.rows[i].v_o) <= 1e-9 * std::abs(*sb.rows[i].v_o));
    }
}

TEST_CASE("csv import errors", "[cli][csv]") {
    auto imp = [](const std::string& text, SweepAxis axis = SweepAxis::Frequency) {
        std::istringstream in(text);
        return csv::import_measured(in, axis);
    };
    CHECK_NOTHROW(imp("axis,p_out_rms[W]\n1,2\n2,3\n"));
    CHECK_NOTHROW(imp("# comment\nfrequency[Hz],p_out_rms[W]\n1,2\n2,3\n"));
    CHECK_THROWS_AS(imp("load[ohm],p_out_rms[W]\n1,2\n2,3\n"), ParseError);
    CHECK_THROWS_AS(imp("axis,p_out_rms[W]\n1,2\n"), ParseError);
    CHECK_THROWS_AS(imp("axis,p_out_rms[W]\n1,2\n2,3\n2,4\n"), ParseError);
    CHECK_THROWS_AS(imp("axis,power\n1,2\n2,3\n"), ParseError);
    try {
        (void)imp("axis,p_out_rms[W]\n1,2\n2,x\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    const auto sorted = imp("axis,p_out_rms[W]\n3,2\n1,3\n2,1\n");
    CHECK(sorted.warnings.size() == 1);
    CHECK(sorted.sweep.rows.front().axis == 1.0);
}

TEST_CASE("command outputs", "[cli][commands]") {
    SECTION("optimize-load finds the matched load") {
        const auto r = run_scn("optimize-load", "load_match.scn");
        CHECK(r.out.find("r_l_opt[ohm],p_out_rms[W],constraint_code,fallback_used,feasible") != std::string::npos);
        std::istringstream in(r.out);
        std::string line;
        std::string last;
        while (std::getline(in, line)) last = line;
        const auto cells = csv::split(last);
        double r_opt = 0.0;
        REQUIRE(csv::parse_double(cells[0], r_opt));
        CHECK(r_opt == Approx(1e3).epsilon(1e-3));
    }
    SECTION("safety notes") {
        const auto r = run_scn("safety", "safety_example.scn");
        CHECK(r.out.find("# note: limits from: example limits") != std::string::npos);
        CHECK(r.out.find("SAR") != std::string::npos);
    }
    SECTION("plot data") {
        cli::Options opt;
        opt.plot_data = true;
        const auto r = run_scn("compare-topologies", "topology.scn", opt);
        CHECK(r.code == 0);
        CHECK(r.out.find("# trace w2w[dB] vs frequency[Hz]") != std::string::npos);
    }
    SECTION("points override and seed") {
        cli::Options opt;
        opt.points = 11;
        const auto r = run_scn("sweep-freq", "resonance.scn", opt);
        std::istringstream in(r.out);
        CHECK(csv::import_measured(in, SweepAxis::Frequency).sweep.rows.size() == 11);

        cli::Options s1, s2;
        s1.seed = 1;
        s2.seed = 2;
        CHECK(run_scn("fit", "fit.scn", s1).out != run_scn("fit", "fit.scn", s2).out);
        CHECK(run_scn("fit", "fit.scn", s1).out == run_scn("fit", "fit.scn", s1).out);
    }
    SECTION("joint multi-receiver columns") {
        cli::Options opt;
        opt.joint = true;
        const auto r = run_scn("multi", "multi.scn", opt);
        CHECK(r.code == 0);
        CHECK(r.out.find("deviation[1]") != std::string::npos);
    }
}

TEST_CASE("exit codes", "[cli][exit]") {
    CHECK(run("sweep-freq", "/nonexistent/config.scn").code == cli::kValidation);
    CHECK(run_scn("sweep-load", "resonance.scn").code == cli::kValidation);
    CHECK(run_scn("safety", "resonance.scn").code == cli::kValidation);

    const auto bad_key = scratch("bad.scn", kReceiver + "wattage = 3\n");
    const auto r = run("resonance", bad_key.string());
    CHECK(r.code == cli::kValidation);
    CHECK(r.err.find("receiver.wattage") != std::string::npos);

    const auto lossless = scratch("lossless.scn", kReceiver + kSource + kBody + "[optimize]\nR_lo = 10\nR_hi = 100k\n");
    CHECK(run("optimize-load", lossless.string()).code == cli::kModel);

    const auto no_l = scratch("nol.scn", "[receiver]\nC_ret = 1p\nC_GB = 0\nL = 0\nR_L = 1k\nC_L = 0\nr_s = 0\n" +
                                             kSource + kBody);
    CHECK(run("resonance", no_l.string()).code == cli::kValidation);

    cli::Options tight;
    tight.tolerance = 1e-30;
    CHECK(run_scn("oracle-check", "oracle.scn", tight).code == cli::kModel);

    const auto limits = fs::absolute(kScenarios / "limits_example.tbl").string();
    const auto hot = scratch("hot.scn", "frequency = 1.747M\n[source]\nvariant = grounded\nV_in = 100\nconvention = pp\n"
                                        "R_S = 0\n" + kBody + "[safety]\nlimits = " + limits + "\n");
    const auto h = run("safety", hot.string());
    CHECK(h.code == cli::kSafetyFail);
    CHECK(h.out.find(",0\n") != std::string::npos);
}

TEST_CASE("output file is written whole", "[cli][output]") {
    const auto dir = fs::temp_directory_path() / "hbp_test_cli";
    fs::create_directories(dir);
    const auto target = dir / "out.csv";
    fs::remove(target);
    cli::Options opt;
    opt.out_path = target.string();
    const auto r = run_scn("sweep-vin", "rx1.scn", opt);
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(target);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == run_scn("sweep-vin", "rx1.scn").out);
    CHECK_FALSE(fs::exists(dir / "out.csv.tmp"));
}
