#pragma once

// Three-level open-system solver for the relaxation-limit analysis: single-
// and double-quantum jump channels plus pure dephasing under the noiseless
// double-drive Hamiltonian embedded on the |0> <-> |-1> transition.
// Basis order everywhere: index 0 = |-1>, 1 = |0>, 2 = |+1>.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdd/protocol.hpp"
#include "cdd/smallmat.hpp"

namespace cdd {

struct LindbladModel {
    double gamma1 = 0.0;     // single-quantum rate (channels 1..4) [1/s]
    double gamma2 = 0.0;     // double-quantum rate (channels 5, 6) [1/s]
    double gamma_phi = 0.0;  // pure-dephasing rate (S_z channel)   [1/s]
    DriveConfig drive;       // acts on the (|0>, |-1>) block

    void validate() const {
        if (gamma1 < 0.0 || gamma2 < 0.0 || gamma_phi < 0.0)
            throw std::invalid_argument("LindbladModel: rates must be >= 0");
        drive.validate();
    }
};

// Pseudo-spin embedding on the driven block: "up" = |0> (index 1),
// "down" = |-1> (index 0); |+1> is a spectator for the drive.
inline Mat3 embed_block(const Mat2& m) {
    Mat3 out = Mat3::zero();
    out(1, 1) = m(0, 0);  // up-up
    out(1, 0) = m(0, 1);  // up-down
    out(0, 1) = m(1, 0);
    out(0, 0) = m(1, 1);
    return out;
}

// Density matrix for a Bloch vector in the driven block (|+1> unpopulated).
inline Mat3 block_state(const std::array<double, 3>& bloch) {
    Mat2 rho = Mat2::zero();
    rho(0, 0) = cplx(0.5 * (1.0 + bloch[2]), 0.0);
    rho(1, 1) = cplx(0.5 * (1.0 - bloch[2]), 0.0);
    rho(0, 1) = cplx(0.5 * bloch[0], -0.5 * bloch[1]);
    rho(1, 0) = std::conj(rho(0, 1));
    return embed_block(rho);
}

inline void check_density3(const Mat3& rho, double pos_tol = 1e-6) {
    const cplx tr = trace(rho);
    if (std::abs(tr.real() - 1.0) > 1e-8 || std::abs(tr.imag()) > 1e-10)
        throw std::runtime_error("DensityMatrix3: trace drifted from 1");
    if (!is_hermitian(rho)) throw std::runtime_error("DensityMatrix3: lost Hermiticity");
    std::array<double, 3> w;
    Mat3 v;
    detail::hermitian_eig3(rho, w, v);
    for (double ev : w)
        if (ev < -pos_tol)
            throw std::runtime_error(
                "DensityMatrix3: negative eigenvalue " + std::to_string(ev) +
                "; reduce the integration step");
}

// Noiseless first-IP drive Hamiltonian on the block (delta = eps = 0):
// (O1/2) sx + O2 cos(O1~ t) sy, zero if the drive is off.
inline Mat3 lindblad_hamiltonian(const LindbladModel& model, double t, bool drive_on) {
    if (!drive_on) return Mat3::zero();
    const double hx = model.drive.omega1;
    const double hy = 2.0 * model.drive.omega2 * std::cos(model.drive.omega1_tilde * t);
    return embed_block(pauli_hamiltonian(hx, hy, 0.0));
}

// d rho = -i[H, rho] + sum_i G_i (L_i rho L_i^dag - (1/2){L_i^dag L_i, rho})
// with L1 = |-1><0| = L2^dag, L3 = |0><+1| = L4^dag, L5 = |-1><+1| = L6^dag,
// L7 = S_z = diag(-1, 0, +1); G_1..4 = gamma1, G_5,6 = gamma2, G_7 = gamma_phi.
inline Mat3 lindblad_rhs(const Mat3& rho, const Mat3& h, const LindbladModel& model) {
    Mat3 d = Mat3::zero();
    // Unitary part -i(H rho - rho H).
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            cplx acc(0.0, 0.0);
            for (int k = 0; k < 3; ++k) acc += h(i, k) * rho(k, j) - rho(i, k) * h(k, j);
            d(i, j) = cplx(0.0, -1.0) * acc;
        }
    // Jump L = |a><b| at rate g: d(a,a) += g rho(b,b); rows/cols b damped g/2.
    auto jump = [&](int a, int b, double g) {
        if (g == 0.0) return;
        d(a, a) += g * rho(b, b);
        for (int j = 0; j < 3; ++j) {
            d(b, j) -= 0.5 * g * rho(b, j);
            d(j, b) -= 0.5 * g * rho(j, b);
        }
    };
    jump(0, 1, model.gamma1);  // L1 = |-1><0|
    jump(1, 0, model.gamma1);  // L2 = |0><-1|
    jump(1, 2, model.gamma1);  // L3 = |0><+1|
    jump(2, 1, model.gamma1);  // L4 = |+1><0|
    jump(0, 2, model.gamma2);  // L5 = |-1><+1|
    jump(2, 0, model.gamma2);  // L6 = |+1><-1|
    // S_z dephasing: d(i,j) -= g/2 (s_i - s_j)^2 rho(i,j), s = (-1, 0, +1).
    if (model.gamma_phi > 0.0) {
        constexpr double s[3] = {-1.0, 0.0, 1.0};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double w = s[i] - s[j];
                d(i, j) -= 0.5 * model.gamma_phi * w * w * rho(i, j);
            }
    }
    return d;
}

enum class LindbladObservable {
    coherence_block,   // |<0| rho_tracked |-1>|, the driven-block coherence
    lock_projection,   // Bloch projection onto the spin-lock axis (tracked frame)
    population_m1,     // <-1| rho |-1>  (lab frame)
    population_0,
    population_p1,
};

struct LindbladCurve {
    std::vector<double> times;
    std::vector<double> values;
};

namespace detail {

inline Mat3 schrodinger_rhs(const Mat3& v, const Mat3& h) {
    Mat3 d = Mat3::zero();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            cplx acc(0.0, 0.0);
            for (int k = 0; k < 3; ++k) acc += h(i, k) * v(k, j);
            d(i, j) = cplx(0.0, -1.0) * acc;
        }
    return d;
}

}  // namespace detail

// Fixed-step RK4 evolution, observables reported in the tracked frame: the
// noiseless drive unitary V(t) is co-integrated with the same stepper, and
// rho_tracked = V^dag rho V so slow dissipative decay is not masked by the
// fast dressed rotation. Positivity is checked at every output sample.
inline LindbladCurve evolve_lindblad(const LindbladModel& model, const Mat3& rho0,
                                     bool drive_on, const std::vector<double>& times,
                                     LindbladObservable obs, double dt = 0.0) {
    model.validate();
    if (times.empty()) throw std::invalid_argument("evolve_lindblad: no sample times");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw std::invalid_argument("evolve_lindblad: times must increase");
    if (!(times.front() >= 0.0)) throw std::invalid_argument("evolve_lindblad: t < 0");
    check_density3(rho0, 1e-10);

    const double period = 2.0 * M_PI / model.drive.omega1_tilde;
    if (dt <= 0.0) dt = period / 200.0;
    if (drive_on && dt > period / 40.0)
        throw std::invalid_argument("evolve_lindblad: dt coarser than period/40");

    const bool tracked =
        obs == LindbladObservable::coherence_block || obs == LindbladObservable::lock_projection;
    const auto n0 = [&] {
        const double dx = model.drive.omega1 - model.drive.omega1_tilde;
        const double we = std::sqrt(dx * dx + model.drive.omega2 * model.drive.omega2);
        return std::array<double, 3>{dx / we, model.drive.omega2 / we, 0.0};
    }();

    auto measure = [&](const Mat3& rho, const Mat3& v) {
        Mat3 r = rho;
        if (tracked && drive_on) r = adjoint(v) * rho * v;
        switch (obs) {
            case LindbladObservable::coherence_block: return std::abs(r(1, 0));
            case LindbladObservable::lock_projection: {
                // <n0 . sigma> on the (|0>, |-1>) block of the tracked state.
                const cplx c01 = r(1, 0);  // up-down coherence
                const double sx = 2.0 * c01.real();
                const double sy = -2.0 * c01.imag();
                const double sz = (r(1, 1) - r(0, 0)).real();
                return n0[0] * sx + n0[1] * sy + n0[2] * sz;
            }
            case LindbladObservable::population_m1: return r(0, 0).real();
            case LindbladObservable::population_0: return r(1, 1).real();
            case LindbladObservable::population_p1: return r(2, 2).real();
        }
        return 0.0;
    };

    Mat3 rho = rho0;
    Mat3 v = Mat3::identity();
    LindbladCurve out;
    out.times = times;
    out.values.reserve(times.size());

    double t = 0.0;
    auto advance = [&](double t_target) {
        const double remaining = t_target - t;
        if (!(remaining > 0.0)) return;
        // Uniform substeps landing exactly on the sample time.
        const auto n = static_cast<std::size_t>(std::ceil(remaining / dt - 1e-9));
        const double h_step = remaining / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double t0 = t + static_cast<double>(i) * h_step;
            const Mat3 h1 = lindblad_hamiltonian(model, t0, drive_on);
            const Mat3 h2 = lindblad_hamiltonian(model, t0 + 0.5 * h_step, drive_on);
            const Mat3 h3 = lindblad_hamiltonian(model, t0 + h_step, drive_on);

            const Mat3 k1 = lindblad_rhs(rho, h1, model);
            const Mat3 k2 = lindblad_rhs(rho + (0.5 * h_step) * k1, h2, model);
            const Mat3 k3 = lindblad_rhs(rho + (0.5 * h_step) * k2, h2, model);
            const Mat3 k4 = lindblad_rhs(rho + h_step * k3, h3, model);
            rho = rho + (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

            if (tracked && drive_on) {
                const Mat3 l1 = detail::schrodinger_rhs(v, h1);
                const Mat3 l2 = detail::schrodinger_rhs(v + (0.5 * h_step) * l1, h2);
                const Mat3 l3 = detail::schrodinger_rhs(v + (0.5 * h_step) * l2, h2);
                const Mat3 l4 = detail::schrodinger_rhs(v + h_step * l3, h3);
                v = v + (h_step / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            }
        }
        t = t_target;
    };

    for (double ts : times) {
        advance(ts);
        rho = 0.5 * (rho + adjoint(rho));  // shed accumulated roundoff skew
        check_density3(rho);
        out.values.push_back(measure(rho, v));
    }
    return out;
}

// T_phi from 1/T_total = 1/T_limit + 1/T_phi; infinite limit returns T_total.
inline double relaxation_free_time(double t_total, double t_limit) {
    if (!(t_total > 0.0) || !(t_limit > 0.0))
        throw std::invalid_argument("relaxation_free_time: times must be > 0");
    if (std::isinf(t_limit)) return t_total;
    if (t_total >= t_limit)
        throw std::invalid_argument(
            "relaxation_free_time: no positive solution (t_total >= t_limit)");
    return 1.0 / (1.0 / t_total - 1.0 / t_limit);
}

}  // namespace cdd
