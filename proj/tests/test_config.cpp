#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "cdd/config.hpp"

using namespace cdd;
using Catch::Approx;

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

TEST_CASE("frequency and time suffixes", "[config]") {
    const auto cfg = parse_config_text(
        "[drive]\n"
        "omega1 = 2MHz\n"
        "omega2 = 200kHz\n"
        "shift = correlated_bs\n"
        "[noise]\n"
        "tau_delta = 25us\n"
        "t2_star = 3.6us\n"
        "tau_eps = 0.5ms\n"
        "delta_omega = 0.005\n"
        "c = 0.75\n"
        "[run]\n"
        "duration = 10us\n"
        "g0 = 94kHz\n");
    REQUIRE(cfg.drive.omega1 == kTwoPi * 2.0e6);  // MHz -> x2pi, exact
    REQUIRE(cfg.drive.omega2 == Approx(kTwoPi * 2.0e5).epsilon(1e-15));
    REQUIRE(cfg.drive.shift_policy == ShiftPolicy::correlated_bs);
    REQUIRE(cfg.noise.delta.tau == Approx(25e-6).epsilon(1e-15));
    REQUIRE(cfg.noise.delta.sigma == Approx(std::sqrt(2.0) / 3.6e-6).epsilon(1e-15));
    REQUIRE(cfg.noise.eps.tau == Approx(5e-4).epsilon(1e-15));
    REQUIRE(cfg.noise.eps.sigma == 0.005);
    REQUIRE(cfg.noise.c == 0.75);
    REQUIRE(cfg.run.duration == Approx(1e-5).epsilon(1e-15));
    REQUIRE(cfg.run.g0 == Approx(kTwoPi * 9.4e4).epsilon(1e-15));

    REQUIRE_THROWS_AS(parse_config_text("[drive]\nomega1 = 2mhz\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[noise]\ntau_delta = 25Hz\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[noise]\ndelta_omega = 0.005us\n"), ConfigError);
}

TEST_CASE("errors carry origin and line number", "[config]") {
    try {
        parse_config_text("[noise]\nc = 1.2\n", "myfile.ini");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.line() == 2);
        REQUIRE(std::string(e.what()).find("myfile.ini:2:") != std::string::npos);
        REQUIRE(std::string(e.what()).find("c out of range") != std::string::npos);
    }

    try {
        parse_config_text("# comment\n\n[drive]\nbogus = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(e.line() == 4);
        REQUIRE(std::string(e.what()).find("unknown key 'bogus'") != std::string::npos);
    }

    REQUIRE_THROWS_AS(parse_config_text("[banana]\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("omega1 = 2MHz\n"), ConfigError);  // no section
    REQUIRE_THROWS_AS(parse_config_text("[drive]\nomega1\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[drive]\nomega1 =\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[drive]\nomega1 = abc\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[run]\nscenario = bogus\n"), ConfigError);

    try {
        parse_config("/nonexistent/dir/x.ini");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("/nonexistent/dir/x.ini") != std::string::npos);
    }
}

TEST_CASE("t2_star and sigma_delta are mutually exclusive", "[config]") {
    REQUIRE_THROWS_AS(
        parse_config_text("[noise]\nt2_star = 3.6us\nsigma_delta = 1e5\n"), ConfigError);
    REQUIRE_THROWS_AS(
        parse_config_text("[noise]\nsigma_delta = 1e5\nt2_star = 3.6us\n"), ConfigError);
    const auto cfg = parse_config_text("[noise]\nsigma_delta = 62.5kHz\n");
    REQUIRE(cfg.noise.delta.sigma == Approx(kTwoPi * 62.5e3).epsilon(1e-15));
}

TEST_CASE("counts, booleans and enums", "[config]") {
    const auto cfg = parse_config_text(
        "[run]\n"
        "scenario = sensing\n"
        "realizations = 42\n"
        "workers = 3\n"
        "seed = 987654321\n"
        "full = yes\n"
        "scheme = high\n"
        "strobe = drive2\n"
        "samples = 64\n"
        "eps_points = 11\n"
        "n_min = 2\n"
        "n_max = 6\n"
        "out_dir = results\n"
        "phi0 = 1.5707963267948966\n");
    REQUIRE(cfg.name == ScenarioName::sensing);
    REQUIRE(cfg.run.n_realizations == 42);
    REQUIRE(cfg.run.workers == 3);
    REQUIRE(cfg.noise.seed == 987654321);
    REQUIRE(cfg.run.full);
    REQUIRE(cfg.run.scheme == SensingKind::high_attenuation);
    REQUIRE(cfg.run.strobe == StrobeMode::drive2);
    REQUIRE(cfg.run.samples == 64);
    REQUIRE(cfg.run.eps_points == 11);
    REQUIRE(cfg.run.n_min == 2);
    REQUIRE(cfg.run.n_max == 6);
    REQUIRE(cfg.run.out_dir == "results");
    REQUIRE(cfg.run.phi0 == Approx(M_PI / 2).epsilon(1e-15));

    REQUIRE_THROWS_AS(parse_config_text("[run]\nrealizations = -5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[run]\nrealizations = 5.5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[run]\nfull = 2\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[run]\nscheme = middle\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[run]\nstrobe = both\n"), ConfigError);
}

TEST_CASE("lindblad section shares the drive grammar", "[config]") {
    const auto cfg = parse_config_text(
        "[lindblad]\n"
        "t1_0 = 5.41ms\n"
        "gamma2_ratio = 1.87\n"
        "gamma_phi = 360\n"
        "omega1 = 4.47MHz\n"
        "omega2 = 0.9MHz\n"
        "omega1_tilde = 4.6965MHz\n");
    REQUIRE(cfg.lindblad.gamma1 == Approx(1.0 / (3.0 * 5.41e-3)).epsilon(1e-15));
    REQUIRE(cfg.lindblad.gamma2 == Approx(1.87 / (3.0 * 5.41e-3)).epsilon(1e-15));
    REQUIRE(cfg.lindblad.gamma_phi == 360.0);
    REQUIRE(cfg.lindblad.drive.omega1 == Approx(kTwoPi * 4.47e6).epsilon(1e-15));
    REQUIRE(cfg.lindblad.drive.omega1_tilde == Approx(kTwoPi * 4.6965e6).epsilon(1e-15));
    REQUIRE(cfg.lindblad.drive.shift_policy == ShiftPolicy::explicit_value);

    REQUIRE_THROWS_AS(parse_config_text("[lindblad]\nt1 = 5.41ms\n"), ConfigError);
}

TEST_CASE("whole-config validation still applies", "[config]") {
    try {
        parse_config_text("[run]\neps_max = 0.6\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        REQUIRE(std::string(e.what()).find("eps_max") != std::string::npos);
    }
    REQUIRE_THROWS_AS(parse_config_text("[drive]\nomega2 = 3MHz\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[run]\nn_min = 7\nn_max = 2\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("[run]\nsamples = 4\n"), ConfigError);
}

TEST_CASE("serialize/parse round trip is byte-stable", "[config]") {
    // Defaults straight through.
    const ScenarioConfig defaults;
    const std::string s1 = serialize_config(defaults);
    const std::string s2 = serialize_config(parse_config_text(s1));
    REQUIRE(s1 == s2);

    // A hand-written file with human units survives one canonicalization.
    const auto cfg = parse_config_text(
        "# Note-4 memory parameters\n"
        "[drive]\n"
        "omega1 = 2MHz\n"
        "omega2 = 0.2MHz\n"
        "shift = correlated\n"
        "\n"
        "[noise]\n"
        "tau_delta = 25us\n"
        "t2_star = 3.6us\n"
        "tau_eps = 500us\n"
        "delta_omega = 0.005\n"
        "c = 1\n"
        "seed = 12345\n"
        "\n"
        "[run]\n"
        "scenario = memory_compare\n"
        "realizations = 500\n"
        "duration = 40us\n");
    const std::string t1 = serialize_config(cfg);
    const std::string t2 = serialize_config(parse_config_text(t1));
    REQUIRE(t1 == t2);
    REQUIRE(parse_config_text(t1).noise.seed == 12345);
    REQUIRE(parse_config_text(t1).name == ScenarioName::memory_compare);
}
