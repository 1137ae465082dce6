#pragma once

// Small dense complex linear algebra: 2x2 Pauli-basis operators and 3x3
// Hermitian operators, closed-form / eigendecomposition matrix exponentials.
// Everything is value-semantic and allocation-free; these kernels sit inside
// Monte Carlo loops that call them billions of times.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace cdd {

using cplx = std::complex<double>;

template <int N>
struct SmallMatrix {
    static_assert(N == 2 || N == 3, "only 2x2 and 3x3 supported");
    std::array<cplx, N * N> a{};  // row-major

    cplx& operator()(int i, int j) { return a[i * N + j]; }
    const cplx& operator()(int i, int j) const { return a[i * N + j]; }

    static SmallMatrix identity() {
        SmallMatrix m;
        for (int i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }
    static SmallMatrix zero() { return SmallMatrix{}; }
};

using Mat2 = SmallMatrix<2>;
using Mat3 = SmallMatrix<3>;

template <int N>
inline SmallMatrix<N> operator+(const SmallMatrix<N>& x, const SmallMatrix<N>& y) {
    SmallMatrix<N> r;
    for (int i = 0; i < N * N; ++i) r.a[i] = x.a[i] + y.a[i];
    return r;
}

template <int N>
inline SmallMatrix<N> operator-(const SmallMatrix<N>& x, const SmallMatrix<N>& y) {
    SmallMatrix<N> r;
    for (int i = 0; i < N * N; ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}

template <int N>
inline SmallMatrix<N> operator*(cplx s, const SmallMatrix<N>& x) {
    SmallMatrix<N> r;
    for (int i = 0; i < N * N; ++i) r.a[i] = s * x.a[i];
    return r;
}

template <int N>
inline SmallMatrix<N> operator*(const SmallMatrix<N>& x, const SmallMatrix<N>& y) {
    SmallMatrix<N> r;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            cplx s = 0.0;
            for (int k = 0; k < N; ++k) s += x(i, k) * y(k, j);
            r(i, j) = s;
        }
    return r;
}

template <int N>
inline SmallMatrix<N> adjoint(const SmallMatrix<N>& x) {
    SmallMatrix<N> r;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r(i, j) = std::conj(x(j, i));
    return r;
}

template <int N>
inline cplx trace(const SmallMatrix<N>& x) {
    cplx s = 0.0;
    for (int i = 0; i < N; ++i) s += x(i, i);
    return s;
}

template <int N>
inline double max_abs(const SmallMatrix<N>& x) {
    double m = 0.0;
    for (const auto& v : x.a) m = std::max(m, std::abs(v));
    return m;
}

template <int N>
inline double max_abs_diff(const SmallMatrix<N>& x, const SmallMatrix<N>& y) {
    double m = 0.0;
    for (int i = 0; i < N * N; ++i) m = std::max(m, std::abs(x.a[i] - y.a[i]));
    return m;
}

// Tag predicates (the invariants behind Hermitian/unitary/density "tags").
template <int N>
inline bool is_hermitian(const SmallMatrix<N>& x, double tol_rel = 1e-12) {
    const double scale = std::max(max_abs(x), 1e-300);
    return max_abs_diff(x, adjoint(x)) < tol_rel * scale;
}

template <int N>
inline bool is_unitary(const SmallMatrix<N>& x, double tol = 1e-10) {
    return max_abs_diff(adjoint(x) * x, SmallMatrix<N>::identity()) < tol;
}

inline Mat2 pauli_x() { return Mat2{{cplx(0), cplx(1), cplx(1), cplx(0)}}; }
inline Mat2 pauli_y() { return Mat2{{cplx(0), cplx(0, -1), cplx(0, 1), cplx(0)}}; }
inline Mat2 pauli_z() { return Mat2{{cplx(1), cplx(0), cplx(0), cplx(-1)}}; }
inline Mat2 pauli_id() { return Mat2::identity(); }

// rho_k = (sigma_0 + sigma_k)/2, the +1 eigenstate projector along axis k.
inline Mat2 density_along(int axis) {
    Mat2 s;
    switch (axis) {
        case 0: s = pauli_x(); break;
        case 1: s = pauli_y(); break;
        case 2: s = pauli_z(); break;
        default: throw std::invalid_argument("density_along: axis must be 0,1,2");
    }
    return 0.5 * (pauli_id() + s);
}

// H = (hx sx + hy sy + hz sz)/2 -- the paper's 1/2-prefactor convention.
inline Mat2 pauli_hamiltonian(double hx, double hy, double hz) {
    if (!std::isfinite(hx) || !std::isfinite(hy) || !std::isfinite(hz))
        throw std::invalid_argument("pauli_hamiltonian: non-finite coefficient");
    Mat2 h;
    h(0, 0) = 0.5 * hz;
    h(1, 1) = -0.5 * hz;
    h(0, 1) = cplx(0.5 * hx, -0.5 * hy);
    h(1, 0) = cplx(0.5 * hx, 0.5 * hy);
    return h;
}

// exp(-i dt (hx sx + hy sy + hz sz)/2) without building H first.
// Closed form: cos(th/2) I - i sin(th/2) (n.sigma), th = |h| dt.
inline Mat2 expm_i_pauli(double hx, double hy, double hz, double dt) {
    const double norm = std::sqrt(hx * hx + hy * hy + hz * hz);
    if (norm == 0.0) return Mat2::identity();
    const double half = 0.5 * norm * dt;
    const double c = std::cos(half);
    const double s = std::sin(half) / norm;  // sin(th/2) * unit-vector scale
    Mat2 u;
    u(0, 0) = cplx(c, -s * hz);
    u(1, 1) = cplx(c, s * hz);
    u(0, 1) = cplx(-s * hy, -s * hx);
    u(1, 0) = cplx(s * hy, -s * hx);
    return u;
}

namespace detail {

// Cyclic complex-Jacobi eigendecomposition of a Hermitian 3x3.
// Returns eigenvalues in w and unitary V with A = V diag(w) V^dagger.
inline void hermitian_eig3(const Mat3& h_in, std::array<double, 3>& w, Mat3& v) {
    Mat3 a = h_in;
    v = Mat3::identity();
    const double scale = std::max(max_abs(a), 1e-300);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off < 1e-13 * scale) break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                const cplx apq = a(p, q);
                if (std::abs(apq) < 1e-300) continue;
                // Diagonalize the (p,q) 2x2 block with a complex rotation:
                // phase out apq, then a real Jacobi rotation.
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const cplx phase = apq / std::abs(apq);
                const double tau = (app - aqq) / (2.0 * std::abs(apq));
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const cplx s = t * c * phase;  // rotation: p' = c p + s* q ; q' = -s p + c q
                for (int k = 0; k < 3; ++k) {
                    const cplx akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp + std::conj(s) * akq;
                    a(k, q) = -s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const cplx apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk + s * aqk;
                    a(q, k) = -std::conj(s) * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const cplx vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp + std::conj(s) * vkq;
                    v(k, q) = -s * vkp + c * vkq;
                }
            }
    }
    for (int i = 0; i < 3; ++i) w[i] = a(i, i).real();
}

}  // namespace detail

// exp(-i H dt) for Hermitian H. dim-2: closed Pauli form; dim-3: Jacobi
// eigendecomposition. Non-Hermitian input is a contract violation.
inline Mat2 expm_i(const Mat2& h, double dt) {
    if (!is_hermitian(h)) throw std::invalid_argument("expm_i: matrix not Hermitian");
    // Decompose H = a0 I + (hx sx + hy sy + hz sz)/2.
    const double a0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double hz = h(0, 0).real() - h(1, 1).real();
    const double hx = 2.0 * h(1, 0).real();
    const double hy = 2.0 * h(1, 0).imag();
    Mat2 u = expm_i_pauli(hx, hy, hz, dt);
    const cplx g = std::exp(cplx(0.0, -a0 * dt));
    return g * u;
}

inline Mat3 expm_i(const Mat3& h, double dt) {
    if (!is_hermitian(h)) throw std::invalid_argument("expm_i: matrix not Hermitian");
    std::array<double, 3> w;
    Mat3 v;
    detail::hermitian_eig3(h, w, v);
    Mat3 d;
    for (int i = 0; i < 3; ++i) d(i, i) = std::exp(cplx(0.0, -w[i] * dt));
    return v * d * adjoint(v);
}

}  // namespace cdd
