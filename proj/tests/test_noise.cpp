#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "cdd/noise.hpp"
#include "cdd/rng.hpp"

using namespace cdd;
using Catch::Approx;

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// Integrated autocorrelation time, trapezoid over the first k_max lags.
// For an exponential autocorrelation this converges to tau (small positive
// discretization bias, small negative truncation bias).
double integrated_autocorr_time(const std::vector<double>& v, double dt, int k_max) {
    const double m = mean_of(v);
    const double v0 = var_of(v, m);
    const std::size_t n = v.size();
    double acc = 0.5;
    for (int k = 1; k <= k_max; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) s += (v[i] - m) * (v[i + k] - m);
        acc += s / (static_cast<double>(n - k) * v0);
    }
    return dt * acc;
}

}  // namespace

TEST_CASE("RngStream is deterministic in (seed, realization, role)", "[noise]") {
    RngStream a(42, 7, StreamRole::delta);
    RngStream b(42, 7, StreamRole::delta);
    for (int i = 0; i < 64; ++i) REQUIRE(a.next_u64() == b.next_u64());

    // Distinct roles / realizations / seeds give distinct streams.
    RngStream c(42, 7, StreamRole::eps1);
    RngStream d(42, 8, StreamRole::delta);
    RngStream e(43, 7, StreamRole::delta);
    RngStream ref(42, 7, StreamRole::delta);
    const std::uint64_t r0 = ref.next_u64();
    REQUIRE(c.next_u64() != r0);
    REQUIRE(d.next_u64() != r0);
    REQUIRE(e.next_u64() != r0);
}

TEST_CASE("next_uniform stays in (0,1); next_gaussian has sane moments", "[noise]") {
    RngStream s(12345, 0, StreamRole::misc);
    for (int i = 0; i < 20000; ++i) {
        const double u = s.next_uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }

    RngStream g(12345, 1, StreamRole::misc);
    const int n = 100000;
    double m = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = g.next_gaussian();
        m += x;
        m2 += x * x;
    }
    m /= n;
    m2 /= n;
    REQUIRE(std::abs(m) < 4.0 / std::sqrt(double(n)));        // 4 sigma
    REQUIRE(std::abs(m2 - m * m - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("ou_step matches the exact update formula", "[noise]") {
    const double tau = 2.0e-5, dt = 3.0e-6, D = 0.8, x = 0.37, n = -1.25;
    const double f = std::exp(-dt / tau);
    const double expected = x * f + n * std::sqrt(0.5 * D * tau * (1.0 - f * f));
    REQUIRE(ou_step(x, dt, tau, D, n) == Approx(expected).epsilon(1e-15));
    REQUIRE(ou_step(x, dt, tau, 0.0, n) == Approx(x * f).epsilon(1e-15));   // D=0: pure decay
    REQUIRE(ou_step(0.0, dt, tau, D, 0.0) == 0.0);

    REQUIRE_THROWS_AS(ou_step(x, 0.0, tau, D, n), std::invalid_argument);
    REQUIRE_THROWS_AS(ou_step(x, dt, 0.0, D, n), std::invalid_argument);
    REQUIRE_THROWS_AS(ou_step(x, dt, tau, -1.0, n), std::invalid_argument);
}

TEST_CASE("one OU step over dt composes exactly from two half steps", "[noise]") {
    // Deterministic part multiplies; the kick variances satisfy
    // s(dt)^2 = s(dt/2)^2 (1 + f(dt/2)^2), which makes dt a free choice.
    const double tau = 5.0e-5, dt = 8.0e-6, D = 1.7;
    const double f_half = std::exp(-0.5 * dt / tau);
    const double s_full = std::sqrt(0.5 * D * tau * (1.0 - std::exp(-2.0 * dt / tau)));
    const double s_half = std::sqrt(0.5 * D * tau * (1.0 - f_half * f_half));
    REQUIRE(s_full * s_full ==
            Approx(s_half * s_half * (1.0 + f_half * f_half)).epsilon(1e-14));
    REQUIRE(ou_step(0.9, dt, tau, D, 0.0) ==
            Approx(ou_step(ou_step(0.9, 0.5 * dt, tau, D, 0.0), 0.5 * dt, tau, D, 0.0))
                .epsilon(1e-14));
}

TEST_CASE("make_ou_trace: stationary mean and variance", "[noise]") {
    // Wide spacing (dt = 5 tau) decorrelates successive samples, so the
    // i.i.d. standard errors used below are valid.
    OuParams p;
    p.tau = 25.0e-6;
    p.sigma = 0.005;
    p.dt = 5.0 * p.tau;
    const std::size_t n = 200000;
    const NoiseTrace tr = make_ou_trace(p, n, RngStream(12345, 0, StreamRole::eps1));
    REQUIRE(tr.values.size() == n);
    REQUIRE(tr.dt == p.dt);

    const double m = mean_of(tr.values);
    const double v = var_of(tr.values, m);
    const double var_exact = 0.5 * p.diffusion() * p.tau;  // = sigma^2
    REQUIRE(var_exact == Approx(p.sigma * p.sigma).epsilon(1e-15));
    REQUIRE(std::abs(m) < 3.0 * p.sigma / std::sqrt(double(n)));
    REQUIRE(std::abs(v - var_exact) < 3.0 * var_exact * std::sqrt(2.0 / double(n)));
}

TEST_CASE("make_ou_trace: autocorrelation time", "[noise]") {
    // Fine spacing (dt = tau/20) resolves the exponential decay; the
    // integrated-autocorrelation estimator then recovers tau.
    OuParams p;
    p.tau = 25.0e-6;
    p.sigma = 0.005;
    p.dt = p.tau / 20.0;
    const std::size_t n = 1000000;
    const NoiseTrace tr = make_ou_trace(p, n, RngStream(12345, 1, StreamRole::eps1));
    const double tau_hat = integrated_autocorr_time(tr.values, tr.dt, 100);
    REQUIRE(tau_hat == Approx(p.tau).epsilon(0.05));
}

TEST_CASE("make_ou_trace: determinism and validation", "[noise]") {
    OuParams p;
    p.tau = 1.0e-5;
    p.sigma = 0.01;
    p.dt = 1.0e-6;
    const NoiseTrace a = make_ou_trace(p, 1000, RngStream(9, 4, StreamRole::delta));
    const NoiseTrace b = make_ou_trace(p, 1000, RngStream(9, 4, StreamRole::delta));
    REQUIRE(a.values == b.values);

    // Stationary init: x0 = sigma * first standard-normal draw of the stream.
    RngStream s(9, 4, StreamRole::delta);
    REQUIRE(a.values[0] == p.sigma * s.next_gaussian());

    REQUIRE_THROWS_AS(make_ou_trace(p, 0, RngStream()), std::invalid_argument);
    OuParams bad = p;
    bad.tau = 0.0;
    REQUIRE_THROWS_AS(make_ou_trace(bad, 10, RngStream()), std::invalid_argument);
    bad = p;
    bad.dt = 0.0;
    REQUIRE_THROWS_AS(make_ou_trace(bad, 10, RngStream()), std::invalid_argument);
    bad = p;
    bad.sigma = -0.1;
    REQUIRE_THROWS_AS(make_ou_trace(bad, 10, RngStream()), std::invalid_argument);
}

TEST_CASE("make_correlated_pair: marginals, cross-correlation, c=1 identity", "[noise]") {
    OuParams p;
    p.tau = 25.0e-6;
    p.sigma = 0.005;
    p.dt = 5.0 * p.tau;  // near-independent samples, i.i.d. error bars apply
    const std::size_t n = 200000;
    const double c = 0.5;
    const auto [e1, e2] = make_correlated_pair(p, c, n, RngStream(12345, 2, StreamRole::eps1),
                                               RngStream(12345, 2, StreamRole::eps_ind));

    const double m1 = mean_of(e1.values), m2 = mean_of(e2.values);
    const double v1 = var_of(e1.values, m1), v2 = var_of(e2.values, m2);
    const double s2 = p.sigma * p.sigma;
    REQUIRE(std::abs(v1 - s2) < 3.0 * s2 * std::sqrt(2.0 / double(n)));
    REQUIRE(std::abs(v2 - s2) < 3.0 * s2 * std::sqrt(2.0 / double(n)));

    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (e1.values[i] - m1) * (e2.values[i] - m2);
    cov /= double(n - 1);
    const double corr = cov / std::sqrt(v1 * v2);
    REQUIRE(corr == Approx(c).margin(0.01));

    // eps1 marginal must be byte-identical to the plain OU trace of stream1.
    const NoiseTrace solo = make_ou_trace(p, n, RngStream(12345, 2, StreamRole::eps1));
    REQUIRE(e1.values == solo.values);

    // c = 1 short-circuits to exactly equal traces.
    const auto [f1, f2] = make_correlated_pair(p, 1.0, 500, RngStream(1, 0, StreamRole::eps1),
                                               RngStream(1, 0, StreamRole::eps_ind));
    REQUIRE(f1.values == f2.values);

    REQUIRE_THROWS_AS(make_correlated_pair(p, 1.2, 10, RngStream(), RngStream()),
                      std::invalid_argument);
}

TEST_CASE("NoiseConfig validation", "[noise]") {
    NoiseConfig cfg;
    cfg.c = 1.0;
    REQUIRE_NOTHROW(cfg.validate());
    cfg.c = -1.0;
    REQUIRE_NOTHROW(cfg.validate());
    cfg.c = 1.0000001;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}
