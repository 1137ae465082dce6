#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cdd/protocol.hpp"
#include "cdd/rng.hpp"

using namespace cdd;
using Catch::Approx;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Golden-section minimizer of gap_std over omega1_tilde -- independent
// numeric oracle for optimal_shift_exact.
double argmin_gap_std(double omega1, double omega2, double c) {
    DriveConfig d;
    d.omega1 = omega1;
    d.omega2 = omega2;
    const double span = 2.0 * omega2 * omega2 / omega1;
    double a = omega1 - span, b = omega1 + span;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    auto f = [&](double tilde) {
        d.omega1_tilde = tilde;
        return gap_std(d, c, 1.0);
    };
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < 200 && (b - a) > 1e-12 * omega1; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("DriveConfig validation and omega_e", "[protocol]") {
    DriveConfig d;
    d.omega1 = kTwoPi * 2.0e6;
    d.omega2 = 0.1 * d.omega1;
    REQUIRE_NOTHROW(d.validate());

    d.omega1_tilde = d.omega1;  // resonant: dx = 0
    REQUIRE(omega_e(d) == Approx(d.omega2).epsilon(1e-15));
    REQUIRE(dressed_gap(d, 0.0, 0.0) == Approx(omega_e(d)).epsilon(1e-15));

    DriveConfig bad = d;
    bad.omega1 = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = d;
    bad.omega2 = d.omega1;  // omega2 must stay below omega1
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = d;
    bad.omega2 = -1.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);

    d.omega2 = 0.31 * d.omega1;
    REQUIRE(d.strains_second_rwa());
    d.omega2 = 0.29 * d.omega1;
    REQUIRE_FALSE(d.strains_second_rwa());
}

TEST_CASE("gap_std agrees with a Monte Carlo standard deviation", "[protocol]") {
    DriveConfig d;
    d.omega1 = kTwoPi * 2.0e6;
    d.omega2 = 0.1 * d.omega1;
    d.omega1_tilde = 1.005 * d.omega1;  // generic off-optimum point
    const double c = 0.6;
    const double sigma = 1.0e-4;  // small enough for first order to dominate

    RngStream g1(777, 0, StreamRole::eps1), g2(777, 0, StreamRole::eps_ind);
    const double mix = std::sqrt(1.0 - c * c);
    const std::size_t n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e1 = sigma * g1.next_gaussian();
        const double e2 = c * e1 + mix * sigma * g2.next_gaussian();
        const double gap = dressed_gap(d, e1, e2);
        s += gap;
        s2 += gap * gap;
    }
    s /= double(n);
    const double std_mc = std::sqrt(s2 / double(n) - s * s);
    REQUIRE(std_mc == Approx(gap_std(d, c, sigma)).epsilon(3.0e-3));

    REQUIRE_THROWS_AS(gap_std(d, 1.5, sigma), std::invalid_argument);
    REQUIRE_THROWS_AS(gap_std(d, c, -1.0), std::invalid_argument);
}

TEST_CASE("optimal_shift_exact: limits and closed-form identities", "[protocol]") {
    const double o1 = kTwoPi * 2.0e6;
    const double o2 = 0.1 * o1;

    // c = 1 identity holds exactly (not just to rounding).
    REQUIRE(optimal_shift_exact(o1, o2, 1.0) == o1 + o2 * o2 / o1);
    // c -> 0 limit is the bare resonance.
    REQUIRE(optimal_shift_exact(o1, o2, 0.0) == o1);
    REQUIRE(optimal_shift_exact(o1, o2, 1e-13) == o1);

    REQUIRE_THROWS_AS(optimal_shift_exact(o1, o2, 1.5), std::invalid_argument);
    REQUIRE_THROWS_AS(optimal_shift_exact(o1, 0.0, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(optimal_shift_exact(o1, o1, 0.5), std::invalid_argument);
}

TEST_CASE("optimal_shift_exact matches the numeric argmin of gap_std", "[protocol]") {
    const double o1 = kTwoPi * 2.0e6;
    const struct {
        double ratio, c;
    } pts[] = {{0.1, 0.3}, {0.2, 0.75}, {0.15, 1.0}, {0.05, -0.5}};
    for (const auto& p : pts) {
        const double o2 = p.ratio * o1;
        const double numeric = argmin_gap_std(o1, o2, p.c);
        const double exact = optimal_shift_exact(o1, o2, p.c);
        REQUIRE(exact == Approx(numeric).epsilon(1e-8));
    }
}

TEST_CASE("clock point: gap is first-order flat, quadratic coefficient known", "[protocol]") {
    DriveConfig d;
    d.omega1 = kTwoPi * 2.0e6;
    d.omega2 = 0.1 * d.omega1;
    d.omega1_tilde = optimal_shift_exact(d.omega1, d.omega2, 1.0);
    const double oe = omega_e(d);

    auto gap = [&](double eps) { return dressed_gap(d, eps, eps); };  // c = 1: eps1 = eps2

    const double h1 = 1.0e-5;
    const double d1 = (gap(h1) - gap(-h1)) / (2.0 * h1);
    REQUIRE(std::abs(d1) < 1.0e-9 * oe);

    const double h2 = 3.0e-5;
    const double d2 = (gap(h2) - 2.0 * gap(0.0) + gap(-h2)) / (h2 * h2);
    const double coeff_expected =
        d.omega1 * std::sqrt(d.omega1 * d.omega1 + d.omega2 * d.omega2) / (2.0 * d.omega2);
    REQUIRE(0.5 * d2 == Approx(coeff_expected).epsilon(1e-6));

    // At this shift the noiseless gap is Omega_2 sqrt(1 + (O2/O1)^2).
    REQUIRE(oe == Approx(d.omega2 * std::sqrt(1.01)).epsilon(1e-14));
}

TEST_CASE("optimal_shift_approx reproduces the quoted experimental shift", "[protocol]") {
    // Omega_1/2pi = 4.470 MHz, Omega_2/2pi = 0.9 MHz, c = 1 with Bloch-
    // Siegert: (1 + 1/4) Omega_2^2/Omega_1 detuning gives 4.6965 MHz (quoted
    // to 5 digits).
    const double o1 = kTwoPi * 4.470e6;
    const double o2 = kTwoPi * 0.9e6;
    const double shift = optimal_shift_approx(o1, o2, 1.0, true);
    REQUIRE(shift == Approx(kTwoPi * 4.6965e6).epsilon(1e-5));
    // Without Bloch-Siegert the coefficient drops to c.
    REQUIRE(optimal_shift_approx(o1, o2, 1.0, false) == Approx(o1 + o2 * o2 / o1));
    REQUIRE_THROWS_AS(optimal_shift_approx(o1, o2, 2.0, false), std::invalid_argument);
}

TEST_CASE("shift_scan_grid and resolve_shift", "[protocol]") {
    const double o1 = kTwoPi * 2.0e6;
    const double o2 = 0.1 * o1;
    const auto grid = shift_scan_grid(o1, o2, {0, 2, 4});
    REQUIRE(grid.size() == 3);
    REQUIRE(grid[0] == o1);
    REQUIRE(grid[1] == Approx(o1 + 0.5 * o2 * o2 / o1).epsilon(1e-15));
    REQUIRE(grid[2] == Approx(o1 + o2 * o2 / o1).epsilon(1e-15));
    REQUIRE_THROWS_AS(shift_scan_grid(o1, o2, {}), std::invalid_argument);

    REQUIRE(resolve_shift(o1, o2, ShiftPolicy::resonant, 1.0) == o1);
    REQUIRE(resolve_shift(o1, o2, ShiftPolicy::correlated, 0.7) ==
            optimal_shift_approx(o1, o2, 0.7, false));
    REQUIRE(resolve_shift(o1, o2, ShiftPolicy::correlated, 0.7, true) ==
            optimal_shift_exact(o1, o2, 0.7));
    REQUIRE(resolve_shift(o1, o2, ShiftPolicy::correlated_bs, 0.7) ==
            optimal_shift_approx(o1, o2, 0.7, true));
    REQUIRE_THROWS_AS(resolve_shift(o1, o2, ShiftPolicy::explicit_value, 0.7),
                      std::invalid_argument);
}

TEST_CASE("sensing_params at the resonant carrier", "[protocol]") {
    DriveConfig d;
    d.omega1 = kTwoPi * 2.0e6;
    d.omega2 = 0.1 * d.omega1;
    d.omega1_tilde = d.omega1;  // dx = 0

    SensingScheme low;
    low.kind = SensingKind::low_attenuation;
    low.g0 = kTwoPi * 94.0e3;
    low.omega0 = resonant_signal_frequency(low.kind, d);
    REQUIRE(low.omega0 == Approx(omega_e(d)).epsilon(1e-15));
    const SensingParams pl = sensing_params(low, d);
    REQUIRE(pl.omega_g == Approx(0.0).margin(1e-9));
    REQUIRE(pl.alpha_dd == 0.5);
    REQUIRE(pl.alpha_tilde == Approx(-1.0).epsilon(1e-15));  // dx=0: -O2/Oe = -1
    REQUIRE(pl.phi == 0.0);
    REQUIRE(std::abs(pl.alpha()) == Approx(0.5).epsilon(1e-15));

    SensingScheme high;
    high.kind = SensingKind::high_attenuation;
    high.g0 = low.g0;
    high.omega0 = resonant_signal_frequency(high.kind, d);
    REQUIRE(high.omega0 == Approx(d.omega1_tilde + omega_e(d)).epsilon(1e-15));
    const SensingParams ph = sensing_params(high, d);
    REQUIRE(ph.omega_g == Approx(0.0).margin(1e-9));
    REQUIRE(ph.alpha_dd == 0.25);
    REQUIRE(ph.alpha_tilde == Approx(1.0).epsilon(1e-15));  // dx=0: (0+Oe)/Oe
    REQUIRE(ph.phi == Approx(M_PI / 2.0));
    REQUIRE(std::abs(ph.alpha()) == Approx(0.25).epsilon(1e-15));

    SensingScheme bad;
    bad.g0 = -1.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}
