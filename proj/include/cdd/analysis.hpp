#pragma once

// Curve post-processing: envelope extraction, stretched-exponential fits,
// threshold coherence times, oscillation-frequency fits, and photon-shot-noise
// sensitivity arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdd {

struct CoherenceFit {
    double t2 = 0.0;            // [s]
    double beta = 1.0;          // stretch exponent
    double rms_residual = 0.0;
    std::string method;         // "stretched_exp" or "threshold"
    bool converged = true;
};

namespace detail {

// Monotone cubic (Fritsch-Carlson) interpolant through (x, y) knots.
struct MonotoneCubic {
    std::vector<double> x, y, m;  // knots and endpoint-slope table

    MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
        : x(std::move(xs)), y(std::move(ys)) {
        const std::size_t n = x.size();
        if (n < 2) throw std::invalid_argument("MonotoneCubic: need >= 2 knots");
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        m.resize(n);
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i)
            m[i] = (d[i - 1] * d[i] <= 0.0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0.0) { m[i] = m[i + 1] = 0.0; continue; }
            const double a = m[i] / d[i], b = m[i + 1] / d[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double t = 3.0 / std::sqrt(s);
                m[i] = t * a * d[i];
                m[i + 1] = t * b * d[i];
            }
        }
    }

    double operator()(double xi) const {
        if (xi <= x.front()) return y.front();
        if (xi >= x.back()) return y.back();
        std::size_t hi = std::upper_bound(x.begin(), x.end(), xi) - x.begin();
        const std::size_t lo = hi - 1;
        const double h = x[hi] - x[lo];
        const double t = (xi - x[lo]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y[lo] + h10 * h * m[lo] + h01 * y[hi] + h11 * h * m[hi];
    }
};

}  // namespace detail

struct EnvelopePair {
    std::vector<double> times;
    std::vector<double> upper;
    std::vector<double> lower;
};

/// Windowed-extrema envelope: take the max/min inside consecutive windows of
// one nominal oscillation period (the caller supplies the period hint), then
// interpolate through the extrema with a monotone cubic. A curve without
// oscillation (monotone/constant) falls back to envelope = curve.
inline EnvelopePair extract_envelope(const std::vector<double>& times,
                                     const std::vector<double>& values,
                                     double period_hint) {
    if (times.size() < 3) throw std::invalid_argument("extract_envelope: need >= 3 samples");
    if (times.size() != values.size())
        throw std::invalid_argument("extract_envelope: size mismatch");
    if (!(period_hint > 0.0))
        throw std::invalid_argument("extract_envelope: period hint must be > 0");

    EnvelopePair out;
    out.times = times;

    // Collect per-window extrema.
    std::vector<double> tx_up, vx_up, tx_lo, vx_lo;
    std::size_t i = 0;
    const double t0 = times.front();
    while (i < times.size()) {
        const std::size_t wi = static_cast<std::size_t>((times[i] - t0) / period_hint);
        std::size_t j = i;
        std::size_t imax = i, imin = i;
        while (j < times.size() &&
               static_cast<std::size_t>((times[j] - t0) / period_hint) == wi) {
            if (values[j] > values[imax]) imax = j;
            if (values[j] < values[imin]) imin = j;
            ++j;
        }
        tx_up.push_back(times[imax]); vx_up.push_back(values[imax]);
        tx_lo.push_back(times[imin]); vx_lo.push_back(values[imin]);
        i = j;
    }

    if (tx_up.size() < 3) {  // fewer than 3 windows: treat as non-oscillating
        out.upper = values;
        out.lower = values;
        return out;
    }
    // Deduplicate identical knot times (possible when a window holds 1 sample).
    auto dedupe = [](std::vector<double>& tx, std::vector<double>& vx) {
        std::size_t w = 0;
        for (std::size_t k = 0; k < tx.size(); ++k) {
            if (w > 0 && tx[k] == tx[w - 1]) { vx[w - 1] = vx[k]; continue; }
            tx[w] = tx[k]; vx[w] = vx[k]; ++w;
        }
        tx.resize(w); vx.resize(w);
    };
    dedupe(tx_up, vx_up);
    dedupe(tx_lo, vx_lo);

    detail::MonotoneCubic up(tx_up, vx_up), lo(tx_lo, vx_lo);
    out.upper.reserve(times.size());
    out.lower.reserve(times.size());
    for (double t : times) {
        out.upper.push_back(up(t));
        out.lower.push_back(lo(t));
    }
    return out;
}

namespace detail {

inline double stretched_sse(const std::vector<double>& t, const std::vector<double>& v,
                            const std::vector<double>& w, double amp, double t2, double beta) {
    double sse = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double model = amp * std::exp(-std::pow(t[i] / t2, beta));
        const double r = v[i] - model;
        sse += w[i] * r * r;
    }
    return sse;
}

}  // namespace detail

enum class FitAmplitude { first_point, unit, free_fit };

// Least-squares fit of A exp(-(t/T2)^beta): coarse log-grid over (T2, beta)
// followed by coordinate-descent refinement to 1e-6 relative tolerance.
inline CoherenceFit fit_stretched_exp(const std::vector<double>& times,
                                      const std::vector<double>& values,
                                      const std::vector<double>& weights = {},
                                      FitAmplitude amp_mode = FitAmplitude::first_point) {
    const std::size_t n = times.size();
    if (n < 8 || values.size() != n)
        throw std::invalid_argument("fit_stretched_exp: need >= 8 (t, v) points");
    if (!(times.back() >= 5.0 * times.front()) || !(times.front() > 0.0))
        throw std::invalid_argument("fit_stretched_exp: times must span a factor >= 5");
    for (double v : values)
        if (!(v > 0.0) || v > 1.05)
            throw std::invalid_argument("fit_stretched_exp: values must lie in (0, 1.05]");
    std::vector<double> w = weights.empty() ? std::vector<double>(n, 1.0) : weights;
    if (w.size() != n) throw std::invalid_argument("fit_stretched_exp: weight size mismatch");

    auto amplitude = [&](double t2, double beta) {
        if (amp_mode == FitAmplitude::unit) return 1.0;
        if (amp_mode == FitAmplitude::first_point) return values.front();
        double num = 0.0, den = 0.0;  // linear LS for A at fixed (t2, beta)
        for (std::size_t i = 0; i < n; ++i) {
            const double model = std::exp(-std::pow(times[i] / t2, beta));
            num += w[i] * values[i] * model;
            den += w[i] * model * model;
        }
        return den > 0.0 ? num / den : values.front();
    };
    auto sse_at = [&](double t2, double beta) {
        return detail::stretched_sse(times, values, w, amplitude(t2, beta), t2, beta);
    };

    // Coarse grid: T2 log-spaced across [t_min/3, 30 t_max], beta in (0.2, 4).
    const double t2_lo = times.front() / 3.0, t2_hi = 30.0 * times.back();
    double best_t2 = 0.0, best_beta = 1.0, best = std::numeric_limits<double>::infinity();
    constexpr int kT2Grid = 80, kBetaGrid = 40;
    for (int a = 0; a < kT2Grid; ++a) {
        const double t2 = t2_lo * std::pow(t2_hi / t2_lo, a / double(kT2Grid - 1));
        for (int b = 0; b < kBetaGrid; ++b) {
            const double beta = 0.2 * std::pow(4.0 / 0.2, b / double(kBetaGrid - 1));
            const double s = sse_at(t2, beta);
            if (s < best) { best = s; best_t2 = t2; best_beta = beta; }
        }
    }

    // Coordinate descent with golden-section line searches in log space.
    constexpr double kGolden = 0.6180339887498949;
    auto golden_min = [&](auto f, double lo, double hi) {
        double a = lo, b = hi;
        double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
        double f1 = f(x1), f2 = f(x2);
        for (int it = 0; it < 200 && (b - a) > 1e-8; ++it) {
            if (f1 < f2) { b = x2; x2 = x1; f2 = f1; x1 = b - kGolden * (b - a); f1 = f(x1); }
            else         { a = x1; x1 = x2; f1 = f2; x2 = a + kGolden * (b - a); f2 = f(x2); }
        }
        return 0.5 * (a + b);
    };

    bool converged = false;
    for (int it = 0; it < 60; ++it) {
        const double prev_t2 = best_t2, prev_beta = best_beta;
        const double lt = std::log(best_t2);
        best_t2 = std::exp(golden_min(
            [&](double l) { return sse_at(std::exp(l), best_beta); }, lt - 1.0, lt + 1.0));
        const double lb = std::log(best_beta);
        const double lb_lo = std::max(lb - 0.7, std::log(0.2));
        const double lb_hi = std::min(lb + 0.7, std::log(4.0));
        best_beta = std::exp(golden_min(
            [&](double l) { return sse_at(best_t2, std::exp(l)); }, lb_lo, lb_hi));
        if (std::abs(best_t2 - prev_t2) < 1e-6 * prev_t2 &&
            std::abs(best_beta - prev_beta) < 1e-6 * prev_beta) {
            converged = true;
            break;
        }
    }

    CoherenceFit fit;
    fit.t2 = best_t2;
    fit.beta = best_beta;
    fit.rms_residual = std::sqrt(sse_at(best_t2, best_beta) / double(n));
    fit.method = "stretched_exp";
    fit.converged = converged;  // grid-best/loop-best still reported on failure
    return fit;
}

struct ThresholdResult {
    double time = 0.0;
    bool reached = false;
};

// First downward crossing of a (already envelope-smoothed) curve, linearly
// interpolated. Curve must start above the threshold.
inline ThresholdResult threshold_time(const std::vector<double>& times,
                                      const std::vector<double>& values, double threshold) {
    if (times.size() != values.size() || times.empty())
        throw std::invalid_argument("threshold_time: bad curve");
    if (!(values.front() > threshold))
        throw std::invalid_argument("threshold_time: curve must start above threshold");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] <= threshold) {
            const double f = (values[i - 1] - threshold) / (values[i - 1] - values[i]);
            return {times[i - 1] + f * (times[i] - times[i - 1]), true};
        }
    }
    return {times.back(), false};  // not reached within the sampled window
}

// Coherence-time thresholds from the paper's 1/e-of-the-gap construction:
// average fidelity decays 1 -> 2/3, single-axis fidelity 1 -> 1/2.
inline constexpr double kAvgFidelityThreshold = 2.0 / 3.0 + 1.0 / (3.0 * M_E);     // ~0.789
inline constexpr double kAxisFidelityThreshold = 0.5 + 0.5 / M_E;                  // ~0.684

struct OscillationFit {
    double omega = 0.0;      // [rad/s]
    double amplitude = 0.0;
    double phase = 0.0;      // value(t) ~ offset + amplitude cos(omega t + phase)
    double offset = 0.0;
    double rms_residual = 0.0;
};

namespace detail {

// For fixed omega, solve the linear LS  v ~ p0 + p1 cos(w t) + p2 sin(w t)
// and return the SSE (and optionally the coefficients).
inline double osc_sse(const std::vector<double>& t, const std::vector<double>& v, double w,
                      double* coef = nullptr) {
    double s[3][3] = {{0}}, rhs[3] = {0};
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double b[3] = {1.0, std::cos(w * t[i]), std::sin(w * t[i])};
        for (int r = 0; r < 3; ++r) {
            rhs[r] += b[r] * v[i];
            for (int c = 0; c < 3; ++c) s[r][c] += b[r] * b[c];
        }
    }
    // Gaussian elimination on the 3x3 normal equations.
    double m[3][4];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m[r][c] = s[r][c];
        m[r][3] = rhs[r];
    }
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        if (std::abs(m[col][col]) < 1e-300) return std::numeric_limits<double>::infinity();
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    const double p0 = m[0][3] / m[0][0], p1 = m[1][3] / m[1][1], p2 = m[2][3] / m[2][2];
    if (coef) { coef[0] = p0; coef[1] = p1; coef[2] = p2; }
    double sse = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = v[i] - (p0 + p1 * std::cos(w * t[i]) + p2 * std::sin(w * t[i]));
        sse += r * r;
    }
    return sse;
}

}  // namespace detail

// Single-tone frequency fit by grid search + golden refinement over
// [omega_lo, omega_hi]; amplitude/phase/offset solved linearly per frequency.
inline OscillationFit fit_oscillation(const std::vector<double>& times,
                                      const std::vector<double>& values, double omega_lo,
                                      double omega_hi) {
    if (times.size() < 8 || times.size() != values.size())
        throw std::invalid_argument("fit_oscillation: need >= 8 samples");
    if (!(omega_hi > omega_lo) || !(omega_lo > 0.0))
        throw std::invalid_argument("fit_oscillation: bad frequency bracket");

    const double span = times.back() - times.front();
    // Grid fine enough to never skip a lobe of the SSE landscape.
    const int n_grid = std::max(200, static_cast<int>((omega_hi - omega_lo) * span));
    double best_w = omega_lo, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n_grid; ++i) {
        const double w = omega_lo + (omega_hi - omega_lo) * i / double(n_grid);
        const double s = detail::osc_sse(times, values, w);
        if (s < best) { best = s; best_w = w; }
    }
    const double step = (omega_hi - omega_lo) / double(n_grid);
    double a = std::max(omega_lo, best_w - step), b = std::min(omega_hi, best_w + step);
    constexpr double kGolden = 0.6180339887498949;
    double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
    double f1 = detail::osc_sse(times, values, x1), f2 = detail::osc_sse(times, values, x2);
    while (b - a > 1e-10 * best_w) {
        if (f1 < f2) { b = x2; x2 = x1; f2 = f1; x1 = b - kGolden * (b - a);
                       f1 = detail::osc_sse(times, values, x1); }
        else         { a = x1; x1 = x2; f1 = f2; x2 = a + kGolden * (b - a);
                       f2 = detail::osc_sse(times, values, x2); }
    }
    OscillationFit fit;
    fit.omega = 0.5 * (a + b);
    double coef[3];
    const double sse = detail::osc_sse(times, values, fit.omega, coef);
    fit.offset = coef[0];
    fit.amplitude = std::hypot(coef[1], coef[2]);
    fit.phase = std::atan2(-coef[2], coef[1]);
    fit.rms_residual = std::sqrt(sse / double(times.size()));
    return fit;
}

struct SensitivityInputs {
    double gamma_nv = 2.0 * M_PI * 28.0e9;  // [rad/(s T)] = 2pi * 28 Hz/nT
    double alpha = 0.5;                     // total signal attenuation
    double a = 1.0, b = 0.76;               // normalized bright/dark signals
    double t2rho = 0.0;                     // [s]
    double p = 1.0;                         // contrast decay exponent
    double n_ph = 0.15;                     // photons per readout
    double tau = 0.0;                       // interrogation time [s]
    double t_r = 0.0;                       // readout dead time [s]
    double overhead_factor = 1.0;           // total-time inflation (>= 1)
    double contrast_override = std::numeric_limits<double>::quiet_NaN();
};

struct SensitivityResult {
    double eta = 0.0;        // [T/sqrt(Hz)], dead time dropped (tau >> t_r)
    double eta_exact = 0.0;  // [T/sqrt(Hz)], dead time retained
    double contrast = 0.0;   // C(tau)
    double tau_opt = 0.0;    // T2rho/2, the p=1 optimum
    double eta_at_opt = 0.0;
};

// eta = 2 sqrt(overhead) / (gamma |alpha| C(tau) sqrt(N_ph tau)) with
// C(tau) = (a - b) exp(-(tau/T2rho)^p) unless the caller supplies C directly.
inline SensitivityResult sensitivity(const SensitivityInputs& in) {
    if (!(in.n_ph > 0.0)) throw std::invalid_argument("sensitivity: n_ph must be > 0");
    if (in.alpha == 0.0) throw std::invalid_argument("sensitivity: alpha must be nonzero");
    if (!(in.tau > 0.0)) throw std::invalid_argument("sensitivity: tau must be > 0");
    if (!(in.overhead_factor >= 1.0))
        throw std::invalid_argument("sensitivity: overhead factor must be >= 1");

    auto contrast_at = [&](double tau) {
        if (!std::isnan(in.contrast_override)) return in.contrast_override;
        if (!(in.a > in.b)) throw std::invalid_argument("sensitivity: require a > b");
        if (!(in.t2rho > 0.0)) throw std::invalid_argument("sensitivity: t2rho must be > 0");
        return (in.a - in.b) * std::exp(-std::pow(tau / in.t2rho, in.p));
    };
    auto eta_at = [&](double tau, double c, double t_r) {
        return 2.0 * std::sqrt(in.overhead_factor * (tau + t_r) / tau) /
               (in.gamma_nv * std::abs(in.alpha) * c * std::sqrt(in.n_ph * tau));
    };

    SensitivityResult out;
    out.contrast = contrast_at(in.tau);
    if (!(out.contrast > 0.0)) throw std::invalid_argument("sensitivity: contrast must be > 0");
    out.eta = eta_at(in.tau, out.contrast, 0.0);
    out.eta_exact = eta_at(in.tau, out.contrast, in.t_r);
    if (in.t2rho > 0.0) {
        out.tau_opt = 0.5 * in.t2rho;
        out.eta_at_opt = eta_at(out.tau_opt, contrast_at(out.tau_opt), 0.0);
    }
    return out;
}

}  // namespace cdd
