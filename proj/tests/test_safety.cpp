#include "hbp/safety.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace hbp;
using namespace hbp::safety;
using Catch::Approx;

namespace {

LimitTable table_from(const std::string& text) {
    std::istringstream in(text);
    return parse_limit_table(in);
}

const char* kTable =
    "# illustrative values only\n"
    "source_label test table\n"
    "band 100e3 1e6 40\n"
    "band 1e6 10e6 20 61 0.16   # trailing comment\n"
    "band 10e6 30e6 - 61\n";

}  // namespace

TEST_CASE("limit table parsing", "[safety][table]") {
    const auto t = table_from(kTable);
    CHECK(t.source_label() == "test table");
    REQUIRE(t.bands().size() == 3);
    CHECK(t.band_for(1.747e6).contact_current == Approx(20e-3));
    CHECK(*t.band_for(1.747e6).e_field == 61.0);
    CHECK(t.band_for(1e6).contact_current == Approx(20e-3));
    CHECK(t.band_for(999999.0).contact_current == Approx(40e-3));
    CHECK_FALSE(t.bands()[2].contact_current.has_value());

    CHECK_THROWS_AS(t.band_for(50e3), UncoveredBandError);
    CHECK_THROWS_AS(t.band_for(30e6), UncoveredBandError);

    CHECK_THROWS_AS(table_from("band 1 2 3\n"), ParseError);
    CHECK_THROWS_AS(table_from("source_label x\nband 2 1 3\n"), ParseError);
    CHECK_THROWS_AS(table_from("source_label x\nband 1 3 3\nband 2 4 3\n"), ParseError);
    CHECK_THROWS_AS(table_from("source_label x\nband 1 3 abc\n"), ParseError);
    CHECK_THROWS_AS(table_from("source_label x\nlimit 1 3 3\n"), ParseError);
    try {
        (void)table_from("source_label x\nband 1 2 3\nband 1 2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("contact current at the stated conditions", "[safety][current]") {
    const auto src = channel::grounded(12.0, Amplitude::PeakToPeak);
    const channel::BodyModel body{150e-12, 0.0};
    const double oracle = 2.0 * M_PI * 1.747e6 * 150e-12 * 12.0 / (2.0 * std::sqrt(2.0));
    CHECK(contact_current(src, body, 1.747e6) == Approx(oracle).epsilon(1e-12));
    CHECK(contact_current(src, body, 1.747e6) == Approx(6.985544843666e-3).epsilon(1e-10));
    CHECK(std::abs(contact_current(src, body, 1.747e6) - 6.99e-3) / 6.99e-3 < 1e-3);
    CHECK(contact_current_network(src, body, 1.747e6) == Approx(oracle).epsilon(1e-12));

    // Receivers hung on a stiff body node do not change the C_B current.
    const channel::ReceiverParams rx{10e-12, 20e-12, 0.33e-3, 1e3, 0.0, 0.0};
    CHECK(contact_current_network(src, body, 1.747e6, {rx, rx}) == Approx(oracle).epsilon(1e-12));
}

TEST_CASE("compliance check and inversion", "[safety][check]") {
    const auto t = table_from(kTable);
    const channel::BodyModel body{150e-12, 0.0};
    const auto src = channel::grounded(12.0, Amplitude::PeakToPeak);
    const auto r = check({src, body, 1.747e6, std::nullopt, std::nullopt}, t);
    CHECK(r.pass);
    CHECK(r.margin == Approx(20e-3 / 6.985544843666e-3).epsilon(1e-9));
    bool noted = false;
    for (const auto& n : r.notes) noted = noted || n.find("SAR") != std::string::npos;
    CHECK(noted);

    const double vmax = max_safe_input(body, 1.747e6, t, src);
    CHECK(vmax == Approx(34.3567).epsilon(1e-5));
    const auto at = check({src.with_v_in(vmax), body, 1.747e6, std::nullopt, std::nullopt}, t);
    CHECK(at.margin == Approx(1.0).epsilon(1e-12));

    const auto field = check({src, body, 1.747e6, 70.0, 0.1}, t);
    CHECK_FALSE(field.pass);
    REQUIRE(field.field_checks.size() == 2);
    CHECK_FALSE(field.field_checks[0].pass);
    CHECK(field.field_checks[1].pass);

    const auto high = check({src, body, 1.2e6, std::nullopt, 0.1}, t);
    CHECK(high.field_checks.size() == 1);

    CHECK_THROWS_AS(check({src, body, 20e6, std::nullopt, std::nullopt}, t), IncompleteTableError);
    CHECK_THROWS_AS(max_safe_input(body, 20e6, t, src), IncompleteTableError);
}

TEST_CASE("inversion is exact across conventions and sources", "[safety][property]") {
    const auto t = table_from(kTable);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> f(150e3, 9e6), cb(50e-12, 300e-12), v(0.5, 30.0), q(1.5, 20.0);
    for (int i = 0; i < 100; ++i) {
        const auto conv = static_cast<Amplitude>(i % 3);
        channel::SourceModel src = i % 3 == 0   ? channel::grounded(v(rng), conv)
                                   : i % 3 == 1 ? channel::wearable(v(rng), conv, 1e-12)
                                                : channel::resonant_wearable(v(rng), conv, 1e-12, q(rng));
        const channel::BodyModel body{cb(rng), 0.0};
        const double freq = f(rng);
        const double vmax = max_safe_input(body, freq, t, src);
        const auto r = check({src.with_v_in(vmax), body, freq, std::nullopt, std::nullopt}, t);
        CHECK(std::abs(r.margin - 1.0) < 1e-9);
    }
}
