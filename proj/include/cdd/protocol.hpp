#pragma once

// Closed-form protocol layer: effective Rabi frequency, dressed-gap
// statistics, optimal modulation-frequency shifts, sensing resonances.
// All frequencies are angular (rad/s).

#include <cmath>
#include <stdexcept>
#include <vector>

namespace cdd {

enum class ShiftPolicy { resonant, correlated, correlated_bs, explicit_value };

struct DriveConfig {
    double omega1 = 0.0;        // Omega_1 [rad/s]
    double omega2 = 0.0;        // Omega_2 [rad/s]
    double omega1_tilde = 0.0;  // second-drive modulation frequency [rad/s]
    ShiftPolicy shift_policy = ShiftPolicy::resonant;

    void validate() const {
        if (!(omega1 > 0.0)) throw std::invalid_argument("DriveConfig: omega1 must be > 0");
        if (!(omega2 >= 0.0) || omega2 >= omega1)
            throw std::invalid_argument("DriveConfig: require 0 <= omega2 < omega1");
    }
    bool strains_second_rwa() const { return omega2 > 0.3 * omega1; }
};

// Omega_e = sqrt(Omega_2^2 + (Omega_1 - tilde)^2), the noiseless dressed gap.
inline double omega_e(const DriveConfig& d) {
    const double dx = d.omega1 - d.omega1_tilde;
    return std::sqrt(d.omega2 * d.omega2 + dx * dx);
}

// Exact (un-expanded) gap of the second-interaction-picture Hamiltonian.
inline double dressed_gap(const DriveConfig& d, double eps1, double eps2) {
    const double y = d.omega2 * (1.0 + eps2);
    const double x = (d.omega1 - d.omega1_tilde) + d.omega1 * eps1;
    return std::sqrt(y * y + x * x);
}

// First-order standard deviation of the dressed gap under correlated relative
// amplitude noise of std sigma on both drives.
inline double gap_std(const DriveConfig& d, double c, double sigma) {
    if (std::abs(c) > 1.0) throw std::invalid_argument("gap_std: |c| must be <= 1");
    if (!(sigma >= 0.0)) throw std::invalid_argument("gap_std: sigma must be >= 0");
    const double dx = d.omega1 - d.omega1_tilde;
    const double o1sq = d.omega1 * d.omega1;
    const double o2sq = d.omega2 * d.omega2;
    const double denom = dx * dx + o2sq;
    const double var = (o1sq * dx * dx + o2sq * o2sq) / denom +
                       c * 2.0 * d.omega1 * o2sq * dx / denom;
    // var can round slightly negative exactly at the optimum
    return sigma * std::sqrt(std::max(var, 0.0));
}

// Exact optimal modulation frequency minimizing gap_std. The formula is
// 0/0 at c=0 (limit Omega_1) and algebraically equal to Omega_1+Omega_2^2/Omega_1
// at c=1; both are handled explicitly so those identities hold exactly.
inline double optimal_shift_exact(double omega1, double omega2, double c) {
    if (std::abs(c) > 1.0) throw std::invalid_argument("optimal_shift_exact: |c| must be <= 1");
    if (!(omega1 > 0.0) || !(omega2 > 0.0) || omega2 >= omega1)
        throw std::invalid_argument("optimal_shift_exact: require 0 < omega2 < omega1");
    if (std::abs(c) < 1e-12) return omega1;
    if (c == 1.0) return omega1 + omega2 * omega2 / omega1;
    const double o1sq = omega1 * omega1;
    const double o2sq = omega2 * omega2;
    const double root = std::sqrt(4.0 * c * c * o2sq * o1sq + (o2sq - o1sq) * (o2sq - o1sq));
    return (root + 2.0 * c * o1sq + (o2sq - o1sq)) / (2.0 * c * omega1);
}

// Leading-order shift Omega_1 + c Omega_2^2/Omega_1; with the Bloch-Siegert
// correction the coefficient becomes (c + 1/4).
inline double optimal_shift_approx(double omega1, double omega2, double c, bool bloch_siegert) {
    if (std::abs(c) > 1.0) throw std::invalid_argument("optimal_shift_approx: |c| must be <= 1");
    const double coeff = c + (bloch_siegert ? 0.25 : 0.0);
    return omega1 + coeff * omega2 * omega2 / omega1;
}

// Detuning grid Omega_1 + (N/4) Omega_2^2/Omega_1 for coherence-vs-N scans.
inline std::vector<double> shift_scan_grid(double omega1, double omega2,
                                           const std::vector<int>& n_list) {
    if (n_list.empty()) throw std::invalid_argument("shift_scan_grid: empty N list");
    std::vector<double> grid;
    grid.reserve(n_list.size());
    for (int n : n_list)
        grid.push_back(omega1 + 0.25 * static_cast<double>(n) * omega2 * omega2 / omega1);
    return grid;
}

inline double resolve_shift(double omega1, double omega2, ShiftPolicy policy, double c,
                            bool use_exact = false) {
    switch (policy) {
        case ShiftPolicy::resonant: return omega1;
        case ShiftPolicy::correlated:
            return use_exact ? optimal_shift_exact(omega1, omega2, c)
                             : optimal_shift_approx(omega1, omega2, c, false);
        case ShiftPolicy::correlated_bs: return optimal_shift_approx(omega1, omega2, c, true);
        case ShiftPolicy::explicit_value:
            throw std::invalid_argument("resolve_shift: explicit policy needs omega1_tilde");
    }
    throw std::invalid_argument("resolve_shift: bad policy");
}

enum class SensingKind { high_attenuation, low_attenuation };

struct SensingScheme {
    SensingKind kind = SensingKind::low_attenuation;
    double omega0 = 0.0;  // signal carrier in the first IP [rad/s]
    double g0 = 0.0;      // signal amplitude [rad/s]
    double phi0 = 0.0;    // signal phase convention in the first IP

    void validate() const {
        if (!(g0 >= 0.0)) throw std::invalid_argument("SensingScheme: g0 must be >= 0");
    }
};

struct SensingParams {
    double omega_g;      // residual signal detuning in the doubly-dressed frame [rad/s]
    double alpha_dd;     // scheme attenuation (1/4 or 1/2)
    double alpha_tilde;  // detuning attenuation
    double phi;          // scheme phase
    double alpha() const { return alpha_dd * alpha_tilde; }
};

inline SensingParams sensing_params(const SensingScheme& s, const DriveConfig& d) {
    const double oe = omega_e(d);
    const double dx = d.omega1 - d.omega1_tilde;
    if (s.kind == SensingKind::high_attenuation)
        return {s.omega0 - d.omega1_tilde - oe, 0.25, (dx + oe) / oe, M_PI / 2.0};
    return {s.omega0 - oe, 0.5, -d.omega2 / oe, 0.0};
}

// Carrier that makes the scheme resonant (omega_g = 0) for a given drive.
inline double resonant_signal_frequency(SensingKind kind, const DriveConfig& d) {
    const double oe = omega_e(d);
    return kind == SensingKind::high_attenuation ? d.omega1_tilde + oe : oe;
}

}  // namespace cdd
