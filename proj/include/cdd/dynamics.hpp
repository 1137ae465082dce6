#pragma once

// Monte Carlo time-domain engine: first-interaction-picture Hamiltonian with
// OU noise, piecewise-constant midpoint propagation, ensemble-averaged
// density matrices, and fidelity/population/sensing/pulse curves.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cdd/analysis.hpp"
#include "cdd/noise.hpp"
#include "cdd/protocol.hpp"
#include "cdd/rng.hpp"
#include "cdd/smallmat.hpp"

namespace cdd {

enum class ProtocolKind { free_evolution, single_drive, double_drive };

struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::double_drive;
    DriveConfig drive;
    NoiseConfig noise;
    std::optional<SensingScheme> signal;
    double dt = 0.0;        // integration step [s]; 0 -> default_dt()
    double duration = 0.0;  // [s]

    // Default step: min(0.5 ns, period/40 of the second-drive modulation).
    static double default_dt(double omega1_tilde) {
        const double period = 2.0 * M_PI / omega1_tilde;
        return std::min(0.5e-9, period / 40.0);
    }

    double step() const { return dt > 0.0 ? dt : default_dt(drive.omega1_tilde); }

    void validate() const {
        drive.validate();
        noise.validate();
        if (signal) signal->validate();
        const double h = step();
        if (!(duration >= h)) throw std::invalid_argument("ProtocolSpec: duration < dt");
        if (!(h <= (2.0 * M_PI / drive.omega1_tilde) / 20.0))
            throw std::invalid_argument(
                "ProtocolSpec: dt too coarse (< 20 steps per 2pi/omega1_tilde)");
    }
};

enum class CurveKind { avg_fidelity, fidelity_x, fidelity_y, fidelity_z, population_0 };

inline const char* curve_kind_name(CurveKind k) {
    switch (k) {
        case CurveKind::avg_fidelity: return "avg_fidelity";
        case CurveKind::fidelity_x: return "fidelity_x";
        case CurveKind::fidelity_y: return "fidelity_y";
        case CurveKind::fidelity_z: return "fidelity_z";
        case CurveKind::population_0: return "population_0";
    }
    return "unknown";
}

struct FidelityCurve {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> std_err;
    std::size_t n_realizations = 0;
    CurveKind kind = CurveKind::avg_fidelity;

    void validate() const {
        if (times.size() != values.size() || times.size() != std_err.size())
            throw std::logic_error("FidelityCurve: ragged columns");
        for (std::size_t i = 0; i + 1 < times.size(); ++i)
            if (!(times[i] < times[i + 1]))
                throw std::logic_error("FidelityCurve: times not strictly increasing");
        for (double v : values)
            if (!(v >= -0.05 && v <= 1.05))
                throw std::logic_error("FidelityCurve: value outside [-0.05, 1.05]");
    }
};

struct NoiseRealization {
    NoiseTrace delta;  // dephasing [rad/s]
    NoiseTrace eps1;   // first-drive relative amplitude error
    NoiseTrace eps2;   // second-drive relative amplitude error
};

// OU staircase spacing: min(tau/50) over the processes active for this kind.
inline double noise_step(const ProtocolSpec& spec) {
    double dtn = spec.noise.delta.tau / 50.0;
    if (spec.kind != ProtocolKind::free_evolution)
        dtn = std::min(dtn, spec.noise.eps.tau / 50.0);
    return std::min(dtn, spec.duration);
}

inline NoiseRealization make_noise_realization(const ProtocolSpec& spec,
                                               std::size_t realization) {
    const double dtn = noise_step(spec);
    const double n_d = std::ceil(spec.duration / dtn) + 2.0;
    if (!(n_d < 5e7)) throw std::runtime_error("noise trace too large; raise tau or dt");
    const std::size_t n = static_cast<std::size_t>(n_d);

    NoiseRealization nr;
    OuParams pd = spec.noise.delta;
    pd.dt = dtn;
    RngStream sd(spec.noise.seed, realization, StreamRole::delta);
    nr.delta = make_ou_trace(pd, n, sd);

    if (spec.kind != ProtocolKind::free_evolution) {
        OuParams pe = spec.noise.eps;
        pe.dt = dtn;
        RngStream s1(spec.noise.seed, realization, StreamRole::eps1);
        if (spec.kind == ProtocolKind::double_drive) {
            RngStream si(spec.noise.seed, realization, StreamRole::eps_ind);
            auto [e1, e2] = make_correlated_pair(pe, spec.noise.c, n, s1, si);
            nr.eps1 = std::move(e1);
            nr.eps2 = std::move(e2);
        } else {
            nr.eps1 = make_ou_trace(pe, n, s1);
        }
    }
    return nr;
}

// First-interaction-picture Hamiltonian at time t:
//   H = (delta/2) sz + (O1 (1+eps1)/2) sx + O2 (1+eps2) cos(O1~ t) sy
// (the second-drive term carries no 1/2 on Omega_2) plus, when a sensing
// signal is configured, (g0/2)[cos(w0 t + phi0) sx + sin(w0 t + phi0) sy].
inline Mat2 h_first_ip(double t, const ProtocolSpec& spec, double delta, double eps1,
                       double eps2) {
    double hx = 0.0, hy = 0.0;
    const double hz = delta;
    if (spec.kind != ProtocolKind::free_evolution) hx = spec.drive.omega1 * (1.0 + eps1);
    if (spec.kind == ProtocolKind::double_drive)
        hy = 2.0 * spec.drive.omega2 * (1.0 + eps2) * std::cos(spec.drive.omega1_tilde * t);
    if (spec.signal) {
        const double ph = spec.signal->omega0 * t + spec.signal->phi0;
        hx += spec.signal->g0 * std::cos(ph);
        hy += spec.signal->g0 * std::sin(ph);
    }
    return pauli_hamiltonian(hx, hy, hz);
}

namespace detail {

// One noise realization propagated over n_steps of dt; sink(sample_idx, U) is
// invoked at each requested step count (sorted ascending, may include 0).
template <class Sink>
void run_realization(const ProtocolSpec& spec, const NoiseRealization& nr,
                     std::size_t n_steps, const std::vector<std::size_t>& sample_steps,
                     Sink&& sink) {
    const double dt = spec.step();
    const bool drive1 = spec.kind != ProtocolKind::free_evolution;
    const bool drive2 = spec.kind == ProtocolKind::double_drive;
    const bool has_sig = spec.signal.has_value();
    const double w1 = spec.drive.omega1, w2 = spec.drive.omega2;
    const double wt = spec.drive.omega1_tilde;
    const double g0 = has_sig ? spec.signal->g0 : 0.0;
    const double ws = has_sig ? spec.signal->omega0 : 0.0;
    const double phi0 = has_sig ? spec.signal->phi0 : 0.0;

    const double inv_dtn = 1.0 / nr.delta.dt;
    const std::size_t n_noise = nr.delta.values.size();
    const double* darr = nr.delta.values.data();
    const double* e1arr = drive1 ? nr.eps1.values.data() : nullptr;
    const double* e2arr = drive2 ? nr.eps2.values.data() : nullptr;
    if (static_cast<double>(n_noise) * nr.delta.dt < spec.duration - 0.5 * nr.delta.dt)
        throw std::invalid_argument("run_realization: noise trace shorter than duration");

    // Running unitary, row-major complex 2x2.
    cplx u00(1.0, 0.0), u01(0.0, 0.0), u10(0.0, 0.0), u11(1.0, 0.0);

    // Incremental phases for the modulation and signal (resynced periodically).
    cplx ph2 = std::polar(1.0, wt * 0.5 * dt);
    const cplx inc2 = std::polar(1.0, wt * dt);
    cplx phs = std::polar(1.0, ws * 0.5 * dt + phi0);
    const cplx incs = std::polar(1.0, ws * dt);
    constexpr std::size_t kResync = 4096;

    std::size_t sidx = 0;
    while (sidx < sample_steps.size() && sample_steps[sidx] == 0) {
        sink(sidx, Mat2::identity());
        ++sidx;
    }

    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t_m = (static_cast<double>(i) + 0.5) * dt;
        std::size_t j = static_cast<std::size_t>(t_m * inv_dtn);
        if (j >= n_noise) j = n_noise - 1;

        double hx = 0.0, hy = 0.0;
        const double hz = darr[j];
        if (drive1) hx = w1 * (1.0 + e1arr[j]);
        if (drive2) hy = 2.0 * w2 * (1.0 + e2arr[j]) * ph2.real();
        if (has_sig) {
            hx += g0 * phs.real();
            hy += g0 * phs.imag();
        }

        const double norm = std::sqrt(hx * hx + hy * hy + hz * hz);
        if (norm > 0.0) {
            const double half = 0.5 * norm * dt;
            const double c = std::cos(half);
            const double sk = std::sin(half) / norm;
            const cplx s00(c, -sk * hz), s01(-sk * hy, -sk * hx);
            const cplx s10(sk * hy, -sk * hx), s11(c, sk * hz);
            const cplx n00 = s00 * u00 + s01 * u10;
            const cplx n01 = s00 * u01 + s01 * u11;
            const cplx n10 = s10 * u00 + s11 * u10;
            const cplx n11 = s10 * u01 + s11 * u11;
            u00 = n00; u01 = n01; u10 = n10; u11 = n11;
        }
        ph2 *= inc2;
        phs *= incs;

        if ((i + 1) % kResync == 0) {
            const double t_next = (static_cast<double>(i) + 1.5) * dt;
            ph2 = std::polar(1.0, wt * t_next);
            phs = std::polar(1.0, ws * t_next + phi0);
            // One Newton step toward the nearest unitary: U <- U (I - E/2),
            // E = U^dag U - I; keeps 1e7-step products orthonormal.
            const cplx e00 = std::conj(u00) * u00 + std::conj(u10) * u10 - 1.0;
            const cplx e01 = std::conj(u00) * u01 + std::conj(u10) * u11;
            const cplx e11 = std::conj(u01) * u01 + std::conj(u11) * u11 - 1.0;
            const cplx f00 = 1.0 - 0.5 * e00, f01 = -0.5 * e01;
            const cplx f10 = -0.5 * std::conj(e01), f11 = 1.0 - 0.5 * e11;
            const cplx m00 = u00 * f00 + u01 * f10;
            const cplx m01 = u00 * f01 + u01 * f11;
            const cplx m10 = u10 * f00 + u11 * f10;
            const cplx m11 = u10 * f01 + u11 * f11;
            u00 = m00; u01 = m01; u10 = m10; u11 = m11;
        }

        while (sidx < sample_steps.size() && sample_steps[sidx] == i + 1) {
            Mat2 u;
            u(0, 0) = u00; u(0, 1) = u01; u(1, 0) = u10; u(1, 1) = u11;
            sink(sidx, u);
            ++sidx;
        }
    }
}

// Bloch rotation matrix of a (special-up-to-phase) unitary: m(t) = R m(0) for
// rho(t) = U rho(0) U^dag, via quaternion extraction. Row-major 3x3.
inline std::array<double, 9> rotation_from_unitary(const Mat2& u) {
    const cplx det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
    const cplx p = std::sqrt(det);  // either branch: R(q) = R(-q)
    const cplx a = u(0, 0) / p, b = u(0, 1) / p;
    double w = a.real(), z = -a.imag(), y = -b.real(), x = -b.imag();
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    w /= n; x /= n; y /= n; z /= n;
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
            2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)};
}

// Distribute realizations over a worker pool, committing results in index
// order so floating-point reductions are schedule-independent.
template <class Make, class Commit>
void ordered_realization_loop(std::size_t n, unsigned workers, Make&& make,
                              Commit&& commit) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t r = 0; r < n; ++r) commit(r, make(r));
        return;
    }
    std::mutex mu;
    std::condition_variable cv;
    std::atomic<std::size_t> next_fetch{0};
    std::size_t next_commit = 0;
    std::map<std::size_t, decltype(make(std::size_t{0}))> pending;
    std::exception_ptr err;
    bool stop = false;
    const std::size_t max_inflight = 4 * static_cast<std::size_t>(workers) + 4;

    auto body = [&] {
        for (;;) {
            const std::size_t r = next_fetch.fetch_add(1);
            if (r >= n) return;
            {
                std::unique_lock lk(mu);
                cv.wait(lk, [&] { return stop || r < next_commit + max_inflight; });
                if (stop) return;
            }
            try {
                auto block = make(r);
                std::lock_guard lk(mu);
                pending.emplace(r, std::move(block));
                while (!pending.empty() && pending.begin()->first == next_commit) {
                    commit(next_commit, std::move(pending.begin()->second));
                    pending.erase(pending.begin());
                    ++next_commit;
                }
                cv.notify_all();
            } catch (...) {
                std::lock_guard lk(mu);
                if (!err) err = std::current_exception();
                stop = true;
                cv.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned k = 0; k < workers; ++k) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace detail

// Worker-count resolution: explicit argument > DD_WORKERS env > hardware.
inline unsigned resolve_workers(unsigned requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("DD_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

// Ordered product of midpoint-sampled step exponentials up to t_end.
inline Mat2 propagate(const ProtocolSpec& spec, const NoiseRealization& nr, double t_end) {
    if (!(t_end > 0.0) || t_end > spec.duration + 1e-12 * spec.duration)
        throw std::invalid_argument("propagate: t_end outside (0, duration]");
    const double dt = spec.step();
    if (static_cast<double>(nr.delta.values.size()) * nr.delta.dt <
        t_end - 0.5 * nr.delta.dt)
        throw std::invalid_argument("propagate: noise trace shorter than t_end");
    const auto n_steps = static_cast<std::size_t>(std::llround(t_end / dt));
    Mat2 out = Mat2::identity();
    detail::run_realization(spec, nr, std::max<std::size_t>(n_steps, 1), {n_steps},
                            [&](std::size_t, const Mat2& u) { out = u; });
    return out;
}

// Max-entry change of the final unitary when dt is halved (convergence gate).
inline double step_convergence_error(const ProtocolSpec& spec, std::size_t realization,
                                     double t_end) {
    ProtocolSpec fine = spec;
    fine.dt = 0.5 * spec.step();
    const auto nr = make_noise_realization(spec, realization);
    return max_abs_diff(propagate(spec, nr, t_end), propagate(fine, nr, t_end));
}

struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::array<double, 9>> mean_rot;  // ensemble-mean Bloch rotation
    std::vector<std::array<double, 9>> ref_rot;   // noiseless reference rotation
    std::vector<std::array<double, 3>> se_axis;   // std. error of F_x, F_y, F_z
    std::vector<double> se_avg;                   // std. error of avg fidelity
    std::size_t n_realizations = 0;
};

// Default curve sampling: 400 log-spaced points between dt and duration.
inline std::vector<double> log_sample_times(double t_min, double t_max, int n = 400) {
    if (!(t_min > 0.0) || !(t_max > t_min)) throw std::invalid_argument("bad sample span");
    std::vector<double> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back(t_min * std::pow(t_max / t_min, i / double(n - 1)));
    return out;
}

// Core ensemble run: one unitary per realization; the three initial axes are
// read off the columns of the per-realization Bloch rotation, so the ensemble
// mean matrix delivers all three rho_k simultaneously.
inline EnsembleResult simulate_ensemble(const ProtocolSpec& spec, std::size_t n_real,
                                        const std::vector<double>& sample_times,
                                        unsigned workers = 0) {
    spec.validate();
    if (n_real < 1) throw std::invalid_argument("simulate_ensemble: n_realizations < 1");
    if (sample_times.empty()) throw std::invalid_argument("simulate_ensemble: no samples");

    const double dt = spec.step();
    const auto n_steps = static_cast<std::size_t>(std::ceil(spec.duration / dt - 1e-9));

    // Snap samples to step boundaries, dedupe, keep strictly increasing.
    std::vector<std::size_t> steps;
    steps.reserve(sample_times.size());
    for (double t : sample_times) {
        if (!(t >= 0.0) || t > spec.duration * (1.0 + 1e-12))
            throw std::invalid_argument("simulate_ensemble: sample time outside run");
        auto k = static_cast<std::size_t>(std::llround(t / dt));
        steps.push_back(std::min(k, n_steps));
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());

    const std::size_t ns = steps.size();
    EnsembleResult res;
    res.n_realizations = n_real;
    res.times.reserve(ns);
    for (auto k : steps) res.times.push_back(static_cast<double>(k) * dt);

    // Noiseless reference (shared across realizations).
    res.ref_rot.resize(ns);
    {
        ProtocolSpec ref = spec;
        ref.noise.delta.sigma = 0.0;
        ref.noise.eps.sigma = 0.0;
        const auto nr0 = make_noise_realization(ref, 0);
        detail::run_realization(ref, nr0, n_steps, steps, [&](std::size_t s, const Mat2& u) {
            res.ref_rot[s] = detail::rotation_from_unitary(u);
        });
    }

    // Per-sample accumulators: 9 rotation sums, 3 axis-F^2 sums, 1 avgF^2 sum.
    std::vector<std::array<double, 13>> acc(ns, std::array<double, 13>{});

    using Block = std::vector<std::array<double, 13>>;
    auto make = [&](std::size_t r) {
        Block blk(ns);
        const auto nr = make_noise_realization(spec, r);
        detail::run_realization(spec, nr, n_steps, steps, [&](std::size_t s, const Mat2& u) {
            const auto rot = detail::rotation_from_unitary(u);
            auto& b = blk[s];
            for (int i = 0; i < 9; ++i) b[i] = rot[i];
            const double fx = 0.5 * (1.0 + rot[0]);
            const double fy = 0.5 * (1.0 + rot[4]);
            const double fz = 0.5 * (1.0 + rot[8]);
            b[9] = fx * fx;
            b[10] = fy * fy;
            b[11] = fz * fz;
            const double fa = (fx + fy + fz) / 3.0;
            b[12] = fa * fa;
        });
        return blk;
    };
    auto commit = [&](std::size_t, Block&& blk) {
        for (std::size_t s = 0; s < ns; ++s)
            for (int i = 0; i < 13; ++i) acc[s][i] += blk[s][i];
    };
    detail::ordered_realization_loop(n_real, resolve_workers(workers), make, commit);

    res.mean_rot.resize(ns);
    res.se_axis.resize(ns);
    res.se_avg.resize(ns);
    const double n = static_cast<double>(n_real);
    auto std_err = [&](double sum, double sumsq) {
        if (n_real < 2) return 0.0;
        const double mean = sum / n;
        const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
        return std::sqrt(var / n);
    };
    for (std::size_t s = 0; s < ns; ++s) {
        for (int i = 0; i < 9; ++i) res.mean_rot[s][i] = acc[s][i] / n;
        const double sfx = 0.5 * (n + acc[s][0]);  // sum of F_x over realizations
        const double sfy = 0.5 * (n + acc[s][4]);
        const double sfz = 0.5 * (n + acc[s][8]);
        res.se_axis[s] = {std_err(sfx, acc[s][9]), std_err(sfy, acc[s][10]),
                          std_err(sfz, acc[s][11])};
        res.se_avg[s] = std_err((sfx + sfy + sfz) / 3.0, acc[s][12]);
    }
    return res;
}

inline FidelityCurve average_fidelity_curve_from(const EnsembleResult& er) {
    FidelityCurve c;
    c.times = er.times;
    c.n_realizations = er.n_realizations;
    c.kind = CurveKind::avg_fidelity;
    c.values.reserve(er.times.size());
    c.std_err = er.se_avg;
    for (const auto& m : er.mean_rot) c.values.push_back(0.5 + (m[0] + m[4] + m[8]) / 6.0);
    return c;
}

inline FidelityCurve state_fidelity_curve_from(const EnsembleResult& er, int axis,
                                               CurveKind kind) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0..2");
    FidelityCurve c;
    c.times = er.times;
    c.n_realizations = er.n_realizations;
    c.kind = kind;
    c.values.reserve(er.times.size());
    c.std_err.reserve(er.times.size());
    for (std::size_t s = 0; s < er.times.size(); ++s) {
        c.values.push_back(0.5 * (1.0 + er.mean_rot[s][4 * axis]));
        c.std_err.push_back(er.se_axis[s][axis]);
    }
    return c;
}

// F(t) = (1/3) sum_k Tr(rho_bar_k(t) rho_k(0)) over the three initial axes.
inline FidelityCurve average_fidelity_curve(const ProtocolSpec& spec, std::size_t n_real,
                                            const std::vector<double>& sample_times,
                                            unsigned workers = 0) {
    return average_fidelity_curve_from(simulate_ensemble(spec, n_real, sample_times, workers));
}

// F_k(t) for one initial axis; x is the memory geometry, y the spin-lock one.
inline FidelityCurve state_fidelity_curve(const ProtocolSpec& spec, char axis,
                                          std::size_t n_real,
                                          const std::vector<double>& sample_times,
                                          unsigned workers = 0) {
    int a;
    CurveKind k;
    switch (axis) {
        case 'x': a = 0; k = CurveKind::fidelity_x; break;
        case 'y': a = 1; k = CurveKind::fidelity_y; break;
        case 'z': a = 2; k = CurveKind::fidelity_z; break;
        default: throw std::invalid_argument("state_fidelity_curve: axis must be x|y|z");
    }
    return state_fidelity_curve_from(simulate_ensemble(spec, n_real, sample_times, workers),
                                     a, k);
}

// Spin-lock direction in the ideal (noiseless co-rotating) frame.
inline std::array<double, 3> lock_axis(const ProtocolSpec& spec) {
    switch (spec.kind) {
        case ProtocolKind::free_evolution: return {0.0, 0.0, 1.0};
        case ProtocolKind::single_drive: return {1.0, 0.0, 0.0};
        case ProtocolKind::double_drive: {
            const double dx = spec.drive.omega1 - spec.drive.omega1_tilde;
            const double we = std::sqrt(dx * dx + spec.drive.omega2 * spec.drive.omega2);
            return {dx / we, spec.drive.omega2 / we, 0.0};
        }
    }
    return {0.0, 0.0, 1.0};
}

struct MemoryEnvelopes {
    std::vector<double> times;
    std::array<std::vector<double>, 3> axis;  // envelope fidelity per initial axis
    std::vector<double> avg;
};

// Oscillation-free fidelity envelopes: rotate the ensemble-mean Bloch map into
// the ideal frame (remainder m~ = R0^T Rbar e_k would stay at e_k if noiseless),
// split m~ into lock and transverse parts against the spin-lock axis, and
// rebuild the peak fidelity  1/2 (1 + l (n.e_k) + |m~_perp| sqrt(1-(n.e_k)^2)).
inline MemoryEnvelopes memory_envelopes(const EnsembleResult& er, const ProtocolSpec& spec) {
    const auto n0 = lock_axis(spec);
    MemoryEnvelopes env;
    env.times = er.times;
    for (auto& a : env.axis) a.reserve(er.times.size());
    env.avg.reserve(er.times.size());
    for (std::size_t s = 0; s < er.times.size(); ++s) {
        const auto& rb = er.mean_rot[s];
        const auto& r0 = er.ref_rot[s];
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) {
            // m~ = R0^T (Rbar e_k): column k of Rbar, rotated back.
            double mk[3] = {rb[k], rb[3 + k], rb[6 + k]};
            double mt[3];
            for (int i = 0; i < 3; ++i)
                mt[i] = r0[3 * 0 + i] * mk[0] + r0[3 * 1 + i] * mk[1] + r0[3 * 2 + i] * mk[2];
            const double l = mt[0] * n0[0] + mt[1] * n0[1] + mt[2] * n0[2];
            double perp = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double p = mt[i] - l * n0[i];
                perp += p * p;
            }
            perp = std::sqrt(perp);
            const double na = n0[k];  // n0 . e_k
            const double f =
                0.5 * (1.0 + l * na + perp * std::sqrt(std::max(0.0, 1.0 - na * na)));
            env.axis[k].push_back(f);
            sum += f;
        }
        env.avg.push_back(sum / 3.0);
    }
    return env;
}

enum class StrobeMode { none, drive1, drive2 };

// Sensing run: population of the initial state sampled stroboscopically at
// multiples of 2pi/Omega_1 (spin-lock geometry, initial y) or 2pi/Omega_2
// (memory geometry, initial z); oscillates at g' = alpha g0 on resonance.
inline FidelityCurve sensing_curve(const ProtocolSpec& spec, std::size_t n_real,
                                   StrobeMode strobe, unsigned workers = 0) {
    if (!spec.signal) throw std::invalid_argument("sensing_curve: no signal configured");
    std::vector<double> samples;
    int axis = 2;
    if (strobe == StrobeMode::none) {
        samples = log_sample_times(spec.step(), spec.duration);
    } else {
        const double w =
            strobe == StrobeMode::drive1 ? spec.drive.omega1 : spec.drive.omega2;
        const double period = 2.0 * M_PI / w;
        axis = strobe == StrobeMode::drive1 ? 1 : 2;
        for (double t = 0.0; t <= spec.duration * (1.0 + 1e-12); t += period)
            samples.push_back(t);
        if (samples.size() < 8)
            throw std::invalid_argument("sensing_curve: duration spans < 8 strobe periods");
    }
    auto curve = state_fidelity_curve_from(simulate_ensemble(spec, n_real, samples, workers),
                                           axis, CurveKind::population_0);
    return curve;
}

struct CorrSweepRow {
    double tau_omega = 0.0;     // amplitude-noise correlation time [s]
    double delta_omega = 0.0;   // relative amplitude-noise std
    double t2_single = 0.0, t2_sdd = 0.0, t2_cdd = 0.0;  // [s]
    double ratio_sdd = 0.0, ratio_cdd = 0.0;             // vs single drive
    bool all_reached = false;
};

struct CoherenceMeasurement {
    double t2 = 0.0;
    bool reached = false;
    double duration = 0.0;  // window that produced the estimate
    FidelityCurve raw;       // plain fidelity curve (oscillating)
    FidelityCurve envelope;  // ideal-frame envelope actually thresholded
};

enum class CoherenceObservable { env_avg, env_x, env_y, env_z };

// Envelope-threshold coherence time with duration escalation (x4, capped).
inline CoherenceMeasurement measure_coherence_time(ProtocolSpec spec,
                                                   CoherenceObservable obs,
                                                   std::size_t n_real, double start_duration,
                                                   double max_duration, unsigned workers = 0,
                                                   int n_samples = 400) {
    if (!(start_duration > 0.0) || !(max_duration >= start_duration))
        throw std::invalid_argument("measure_coherence_time: bad duration window");
    const double thresh =
        obs == CoherenceObservable::env_avg ? kAvgFidelityThreshold : kAxisFidelityThreshold;
    CoherenceMeasurement out;
    double duration = start_duration;
    for (;;) {
        spec.duration = duration;
        const auto samples = log_sample_times(spec.step(), duration, n_samples);
        const auto er = simulate_ensemble(spec, n_real, samples, workers);
        const auto env = memory_envelopes(er, spec);

        const std::vector<double>* vals = &env.avg;
        int axis = -1;
        switch (obs) {
            case CoherenceObservable::env_avg: break;
            case CoherenceObservable::env_x: axis = 0; break;
            case CoherenceObservable::env_y: axis = 1; break;
            case CoherenceObservable::env_z: axis = 2; break;
        }
        if (axis >= 0) vals = &env.axis[axis];

        const auto th = threshold_time(env.times, *vals, thresh);
        out.t2 = th.time;
        out.reached = th.reached;
        out.duration = duration;
        if (th.reached || duration >= max_duration) {
            out.raw = axis < 0 ? average_fidelity_curve_from(er)
                               : state_fidelity_curve_from(
                                     er, axis,
                                     axis == 0   ? CurveKind::fidelity_x
                                     : axis == 1 ? CurveKind::fidelity_y
                                                 : CurveKind::fidelity_z);
            out.envelope = out.raw;
            out.envelope.values = *vals;
            out.envelope.std_err.assign(vals->size(), 0.0);
            return out;
        }
        duration = std::min(duration * 4.0, max_duration);
    }
}

// Single / SDD / CDD coherence versus amplitude-noise correlation time
// (paired tau, sigma lists); CDD uses the Bloch-Siegert-corrected shift.
inline std::vector<CorrSweepRow> coherence_vs_correlation_time(
    const ProtocolSpec& base, const std::vector<double>& tau_list,
    const std::vector<double>& sigma_list, std::size_t n_real, unsigned workers = 0) {
    if (tau_list.size() != sigma_list.size() || tau_list.empty())
        throw std::invalid_argument("coherence_vs_correlation_time: bad tau/sigma lists");
    std::vector<CorrSweepRow> rows;
    rows.reserve(tau_list.size());
    for (std::size_t i = 0; i < tau_list.size(); ++i) {
        ProtocolSpec p = base;
        p.signal.reset();
        p.noise.eps.tau = tau_list[i];
        p.noise.eps.sigma = sigma_list[i];

        CorrSweepRow row;
        row.tau_omega = tau_list[i];
        row.delta_omega = sigma_list[i];

        p.kind = ProtocolKind::single_drive;
        p.drive.omega1_tilde = p.drive.omega1;
        const auto single = measure_coherence_time(p, CoherenceObservable::env_y, n_real,
                                                   60e-6, 1e-3, workers);

        p.kind = ProtocolKind::double_drive;
        p.drive.omega1_tilde = p.drive.omega1;  // SDD: resonant modulation
        const auto sdd = measure_coherence_time(p, CoherenceObservable::env_x, n_real, 1e-3,
                                                8e-3, workers);

        p.drive.omega1_tilde = optimal_shift_approx(p.drive.omega1, p.drive.omega2,
                                                    p.noise.c, /*bloch_siegert=*/true);
        const auto cdd = measure_coherence_time(p, CoherenceObservable::env_x, n_real, 6e-3,
                                                24e-3, workers);

        row.t2_single = single.t2;
        row.t2_sdd = sdd.t2;
        row.t2_cdd = cdd.t2;
        row.ratio_sdd = sdd.t2 / single.t2;
        row.ratio_cdd = cdd.t2 / single.t2;
        row.all_reached = single.reached && sdd.reached && cdd.reached;
        rows.push_back(row);
    }
    return rows;
}

enum class PulseKind { conventional, sdd, cdd };

// Quasi-static pulse-error robustness in the second-interaction-picture
// (H_II) frame; fidelity is the overlap with the eps=0 outcome state from |0>.
inline double pulse_fidelity(PulseKind kind, double omega1, double eps) {
    if (!(omega1 > 0.0)) throw std::invalid_argument("pulse_fidelity: omega1 must be > 0");
    if (!(std::abs(eps) <= 0.5)) throw std::invalid_argument("pulse_fidelity: |eps| > 0.5");
    const double t_pi = M_PI / omega1;

    auto evolve = [&](double e) {
        switch (kind) {
            case PulseKind::conventional:
                return expm_i_pauli(omega1 * (1.0 + e), 0.0, 0.0, t_pi);
            case PulseKind::sdd: {
                const double w2 = omega1 / 4.0;
                return expm_i_pauli(omega1 * e, w2 * (1.0 + e), 0.0, 4.0 * t_pi);
            }
            case PulseKind::cdd: {
                const double w2 = omega1 / std::sqrt(15.0);
                const double dx = -w2 * w2 / omega1;  // omega1 - omega1_tilde
                return expm_i_pauli(dx + omega1 * e, w2 * (1.0 + e), 0.0, 3.75 * t_pi);
            }
        }
        throw std::logic_error("pulse_fidelity: bad kind");
    };

    const Mat2 u0 = evolve(0.0);
    const Mat2 u = evolve(eps);
    // |<psi0| U |0>|^2 with |psi0> = U(0)|0> (column 0 of each).
    const cplx ov = std::conj(u0(0, 0)) * u(0, 0) + std::conj(u0(1, 0)) * u(1, 0);
    return std::norm(ov);
}

}  // namespace cdd
