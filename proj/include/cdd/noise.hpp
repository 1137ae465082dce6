#pragma once

// Exact Ornstein-Uhlenbeck trace generation and correlated noise pairs.
//
// The OU update x -> x e^{-dt/tau} + n sqrt((D tau/2)(1 - e^{-2 dt/tau})) is
// exact for any dt (n a unit Gaussian), so the sample spacing is a free
// choice. Stationary statistics: variance D tau / 2 = sigma^2, lag-k
// autocorrelation exp(-k dt / tau). Traces start from the stationary
// distribution, x0 ~ N(0, sigma^2).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cdd/rng.hpp"

namespace cdd {

struct OuParams {
    double tau = 0.0;    // correlation time [s]
    double sigma = 0.0;  // stationary std (dimensionless or rad/s)
    double dt = 0.0;     // sample spacing [s]

    double diffusion() const { return 2.0 * sigma * sigma / tau; }  // D = 2 sigma^2 / tau

    void validate() const {
        if (!(tau > 0.0)) throw std::invalid_argument("OuParams: tau must be > 0");
        if (!(sigma >= 0.0)) throw std::invalid_argument("OuParams: sigma must be >= 0");
        if (!(dt > 0.0)) throw std::invalid_argument("OuParams: dt must be > 0");
    }
};

struct NoiseConfig {
    OuParams delta;  // environmental dephasing noise delta(t) [rad/s]
    OuParams eps;    // relative drive-amplitude error [dimensionless]
    double c = 1.0;  // cross-correlation of eps_1, eps_2
    std::uint64_t seed = 0;

    void validate() const {
        if (std::abs(c) > 1.0) throw std::invalid_argument("NoiseConfig: |c| must be <= 1");
    }
};

struct NoiseTrace {
    double dt = 0.0;
    std::vector<double> values;
};

inline double ou_step(double x, double dt, double tau, double D, double n) {
    if (!(tau > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("ou_step: tau and dt must be > 0");
    if (!(D >= 0.0)) throw std::invalid_argument("ou_step: D must be >= 0");
    const double f = std::exp(-dt / tau);
    return x * f + n * std::sqrt(0.5 * D * tau * (1.0 - f * f));
}

inline NoiseTrace make_ou_trace(const OuParams& p, std::size_t n_steps, RngStream stream) {
    p.validate();
    if (n_steps < 1) throw std::invalid_argument("make_ou_trace: n_steps must be >= 1");
    NoiseTrace tr;
    tr.dt = p.dt;
    tr.values.resize(n_steps);
    const double f = std::exp(-p.dt / p.tau);
    const double kick = p.sigma * std::sqrt(1.0 - f * f);
    double x = p.sigma * stream.next_gaussian();  // stationary init
    tr.values[0] = x;
    for (std::size_t i = 1; i < n_steps; ++i) {
        x = x * f + kick * stream.next_gaussian();
        tr.values[i] = x;
    }
    return tr;
}

// eps1 is OU(p); eps2 = c eps1 + sqrt(1-c^2) eps_ind with eps_ind an
// independent OU(p). Both marginals are exactly OU(p); the cross-correlation
// at every lag is c.
inline std::pair<NoiseTrace, NoiseTrace> make_correlated_pair(const OuParams& p, double c,
                                                              std::size_t n_steps,
                                                              RngStream stream1,
                                                              RngStream stream_ind) {
    if (std::abs(c) > 1.0) throw std::invalid_argument("make_correlated_pair: |c| must be <= 1");
    NoiseTrace e1 = make_ou_trace(p, n_steps, stream1);
    NoiseTrace e2;
    e2.dt = p.dt;
    e2.values.resize(n_steps);
    if (c == 1.0) {
        e2.values = e1.values;  // paper's eps1(t) = eps2(t) = eps(t) case
        return {std::move(e1), std::move(e2)};
    }
    NoiseTrace ind = make_ou_trace(p, n_steps, stream_ind);
    const double mix = std::sqrt(1.0 - c * c);
    for (std::size_t i = 0; i < n_steps; ++i)
        e2.values[i] = c * e1.values[i] + mix * ind.values[i];
    return {std::move(e1), std::move(e2)};
}

}  // namespace cdd
