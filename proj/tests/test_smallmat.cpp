#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>

#include "cdd/smallmat.hpp"

using namespace cdd;
using Catch::Approx;

namespace {

// Truncated series sum(-i H dt)^k / k! -- independent oracle for expm_i.
template <int N>
SmallMatrix<N> expm_series(const SmallMatrix<N>& h, double dt, int order = 16) {
    SmallMatrix<N> term = SmallMatrix<N>::identity();
    SmallMatrix<N> sum = term;
    for (int k = 1; k <= order; ++k) {
        term = (cplx(0.0, -dt) * (1.0 / k)) * (h * term);
        sum = sum + term;
    }
    return sum;
}

}  // namespace

TEST_CASE("pauli matrices and density_along basics", "[smallmat]") {
    REQUIRE(max_abs_diff(pauli_x() * pauli_x(), Mat2::identity()) < 1e-15);
    REQUIRE(max_abs_diff(pauli_y() * pauli_y(), Mat2::identity()) < 1e-15);
    REQUIRE(max_abs_diff(pauli_z() * pauli_z(), Mat2::identity()) < 1e-15);
    // sx sy = i sz
    REQUIRE(max_abs_diff(pauli_x() * pauli_y(), cplx(0, 1) * pauli_z()) < 1e-15);

    for (int axis = 0; axis < 3; ++axis) {
        const Mat2 rho = density_along(axis);
        REQUIRE(trace(rho).real() == Approx(1.0));
        REQUIRE(is_hermitian(rho));
        REQUIRE(max_abs_diff(rho * rho, rho) < 1e-15);  // pure state projector
    }
    REQUIRE_THROWS_AS(density_along(3), std::invalid_argument);
}

TEST_CASE("pauli_hamiltonian carries the 1/2 prefactor", "[smallmat]") {
    const Mat2 h = pauli_hamiltonian(2.0, 4.0, 6.0);
    REQUIRE(h(0, 0).real() == Approx(3.0));   // hz/2
    REQUIRE(h(1, 1).real() == Approx(-3.0));
    REQUIRE(h(1, 0).real() == Approx(1.0));   // hx/2
    REQUIRE(h(1, 0).imag() == Approx(2.0));   // hy/2
    REQUIRE(is_hermitian(h));
    REQUIRE_THROWS_AS(pauli_hamiltonian(std::nan(""), 0, 0), std::invalid_argument);
}

TEST_CASE("expm_i_pauli: pi pulse about x gives -i sigma_x", "[smallmat]") {
    const double w = 2.0 * M_PI * 2.0e6;
    const Mat2 u = expm_i_pauli(w, 0.0, 0.0, M_PI / w);
    REQUIRE(max_abs_diff(u, cplx(0, -1) * pauli_x()) < 1e-12);
    REQUIRE(is_unitary(u));
    // Population transfer of a pi pulse.
    REQUIRE(std::norm(u(1, 0)) == Approx(1.0).margin(1e-12));
}

TEST_CASE("expm_i_pauli matches the series oracle and composes inverses", "[smallmat]") {
    const double hx = 1.3, hy = -0.4, hz = 2.1, dt = 0.05;
    const Mat2 u = expm_i_pauli(hx, hy, hz, dt);
    REQUIRE(max_abs_diff(u, expm_series(pauli_hamiltonian(hx, hy, hz), dt)) < 1e-13);
    REQUIRE(max_abs_diff(u * expm_i_pauli(hx, hy, hz, -dt), Mat2::identity()) < 1e-14);
    REQUIRE(max_abs_diff(expm_i_pauli(0, 0, 0, 1.0), Mat2::identity()) == 0.0);
}

TEST_CASE("expm_i(Mat2) keeps the identity (trace) part", "[smallmat]") {
    // H = mu I + (w/2) sz has exact phases e^{-i(mu +- w/2)dt}.
    const double mu = 0.7, w = 1.9, dt = 0.31;
    Mat2 h = pauli_hamiltonian(0.0, 0.0, w);
    h(0, 0) += mu;
    h(1, 1) += mu;
    const Mat2 u = expm_i(h, dt);
    REQUIRE(std::abs(u(0, 0) - std::exp(cplx(0, -(mu + 0.5 * w) * dt))) < 1e-14);
    REQUIRE(std::abs(u(1, 1) - std::exp(cplx(0, -(mu - 0.5 * w) * dt))) < 1e-14);
    REQUIRE(std::abs(u(0, 1)) < 1e-15);

    Mat2 bad = h;
    bad(0, 1) = cplx(1.0, 0.0);  // breaks Hermiticity against (1,0)=0
    REQUIRE_THROWS_AS(expm_i(bad, dt), std::invalid_argument);
}

TEST_CASE("hermitian_eig3 on a tridiagonal with known spectrum", "[smallmat]") {
    // [[2,1,0],[1,2,1],[0,1,2]] has eigenvalues 2-sqrt(2), 2, 2+sqrt(2).
    Mat3 a = Mat3::zero();
    a(0, 0) = a(1, 1) = a(2, 2) = 2.0;
    a(0, 1) = a(1, 0) = a(1, 2) = a(2, 1) = 1.0;

    std::array<double, 3> w;
    Mat3 v;
    detail::hermitian_eig3(a, w, v);
    std::array<double, 3> ws = w;
    std::sort(ws.begin(), ws.end());
    REQUIRE(ws[0] == Approx(2.0 - std::sqrt(2.0)).margin(5e-12));
    REQUIRE(ws[1] == Approx(2.0).margin(5e-12));
    REQUIRE(ws[2] == Approx(2.0 + std::sqrt(2.0)).margin(5e-12));
    REQUIRE(is_unitary(v, 1e-12));

    // Reconstruction A = V diag(w) V^dag with the unsorted pairing.
    Mat3 d = Mat3::zero();
    for (int i = 0; i < 3; ++i) d(i, i) = w[i];
    REQUIRE(max_abs_diff(v * d * adjoint(v), a) < 5e-12);
}

TEST_CASE("expm_i(Mat3) matches the series oracle", "[smallmat]") {
    Mat3 h = Mat3::zero();
    h(0, 0) = 0.5;
    h(1, 1) = -0.3;
    h(2, 2) = 1.1;
    h(0, 1) = cplx(0.4, 0.2);
    h(1, 0) = std::conj(h(0, 1));
    h(1, 2) = cplx(-0.7, 0.9);
    h(2, 1) = std::conj(h(1, 2));

    const double dt = 0.2;
    const Mat3 u = expm_i(h, dt);
    REQUIRE(is_unitary(u, 1e-12));
    REQUIRE(max_abs_diff(u, expm_series(h, dt)) < 1e-12);
}
