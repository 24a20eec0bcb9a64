#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ionchain/errors.hpp"
#include "ionchain/modespec.hpp"

using namespace ionchain;

namespace {
Crystal crystal_of(int n, double length_d0) {
    TrapConfig c;
    c.n_ions = n;
    c.length = length_d0 * c.d0;
    return solve_equilibrium(c);
}
}  // namespace

TEST_CASE("coupling matrix structure") {
    const Crystal c = crystal_of(40, 60.0);
    const TweezerLayout t = periodic_tweezers(40, 10, 3.0);
    for (Axis axis : {Axis::x, Axis::y, Axis::z}) {
        const CouplingMatrix a = coupling_matrix(c, axis, t);
        const double cx = axis == Axis::z ? 2.0 : -1.0;
        CHECK(a.c == cx);
        CHECK((a.a - a.a.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const DimensionlessTrap d = dimensionless(c.config);
        for (int i = 0; i < 40; ++i) {
            double sum = 0.0;
            for (int l = 0; l < 40; ++l) {
                if (l == i) continue;
                const double r = std::abs(c.u[i] - c.u[l]);
                sum += cx / (r * r * r);
                CHECK(a.a(i, l) == doctest::Approx(-cx / (r * r * r)).epsilon(1e-14));
            }
            const double base = axis == Axis::z ? bookend_potential(c.u[i], d).d2u : d.nu_x * d.nu_x;
            const double ot = t.nu(i, axis);
            CHECK(a.a(i, i) - base - ot * ot == doctest::Approx(sum).epsilon(1e-10));
        }
    }
}

TEST_CASE("single ion spectrum") {
    const Crystal c = crystal_of(1, 100.0);
    const DimensionlessTrap d = dimensionless(c.config);
    const ModeSpectrum z = spectrum(coupling_matrix(c, Axis::z, {}));
    CHECK(z.omega[0] == doctest::Approx(std::sqrt(bookend_potential(0.0, d).d2u)).epsilon(1e-14));
    const ModeSpectrum x = spectrum(coupling_matrix(c, Axis::x, {}));
    CHECK(x.omega[0] == doctest::Approx(d.nu_x).epsilon(1e-14));
    CHECK(x.omega[0] == doctest::Approx(34.85).epsilon(0.002));
}

TEST_CASE("two pinned ions at unit spacing") {
    Eigen::VectorXd u(2);
    u << 0.0, 1.0;
    const double nu = 1.7;
    const CouplingMatrix a = coupling_matrix(u, Axis::z, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, nu * nu));
    CHECK(a.a(0, 0) == doctest::Approx(nu * nu + 2));
    CHECK(a.a(0, 1) == doctest::Approx(-2));
    const ModeSpectrum s = spectrum(a);
    CHECK(s.omega[0] * s.omega[0] == doctest::Approx(nu * nu).epsilon(1e-12));
    CHECK(s.omega[1] * s.omega[1] == doctest::Approx(nu * nu + 4).epsilon(1e-12));
}

TEST_CASE("three ions in a harmonic well: 1 : sqrt3 : sqrt(29/5)") {
    // Equilibrium in a unit harmonic well: 0 and +-(5/4)^(1/3).
    const double s = std::cbrt(1.25);
    Eigen::VectorXd u(3);
    u << -s, 0.0, s;
    const ModeSpectrum m = spectrum(coupling_matrix(u, Axis::z, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3)));
    CHECK(m.omega[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m.omega[1] / m.omega[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-6));
    CHECK(m.omega[2] / m.omega[0] == doctest::Approx(std::sqrt(29.0 / 5.0)).epsilon(1e-6));
}

TEST_CASE("spectrum invariants") {
    const Crystal c = crystal_of(80, 100.0);
    for (Axis axis : {Axis::x, Axis::z}) {
        const CouplingMatrix a = coupling_matrix(c, axis, periodic_tweezers(80, 10, 2.0));
        const ModeSpectrum m = spectrum(a);
        const int n = m.size();
        CHECK((m.g.transpose() * m.g - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
        const Eigen::MatrixXd d = m.g.transpose() * a.a * m.g;
        const double scale = d.diagonal().cwiseAbs().maxCoeff();
        Eigen::MatrixXd off = d;
        off.diagonal().setZero();
        CHECK(off.cwiseAbs().maxCoeff() < 1e-9 * scale);
        for (int k = 0; k < n; ++k) CHECK(d(k, k) == doctest::Approx(m.omega[k] * m.omega[k]).epsilon(1e-9));
        for (int i = 0; i < n; ++i) CHECK(m.g.row(i).squaredNorm() == doctest::Approx(1.0).epsilon(1e-10));
        for (int k = 1; k < n; ++k) CHECK(m.omega[k] >= m.omega[k - 1]);

        // Relabelling ions leaves the spectrum unchanged.
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::reverse(perm.begin(), perm.begin() + n / 2);
        CouplingMatrix p = a;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) p.a(i, j) = a.a(perm[i], perm[j]);
        const ModeSpectrum mp = spectrum(p);
        CHECK((mp.omega - m.omega).cwiseAbs().maxCoeff() < 1e-10 * m.omega.maxCoeff());
    }
}

TEST_CASE("adding tweezers never lowers any eigenvalue") {
    const Crystal c = crystal_of(120, 140.0);
    const ModeSpectrum free = spectrum(coupling_matrix(c, Axis::z, {}));
    for (double nu : {0.1, 1.0, 10.0}) {
        const ModeSpectrum t = spectrum(coupling_matrix(c, Axis::z, periodic_tweezers(120, 7, nu)));
        for (int k = 0; k < free.size(); ++k) CHECK(t.omega[k] >= free.omega[k] - 1e-12);
    }
    const ModeSpectrum zero = spectrum(coupling_matrix(c, Axis::z, periodic_tweezers(120, 7, 0.0)));
    CHECK((zero.omega - free.omega).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("x-incident tweezers leave the x spectrum untouched") {
    const Crystal c = crystal_of(50, 70.0);
    const ModeSpectrum a = spectrum(coupling_matrix(c, Axis::x, {}));
    const ModeSpectrum b = spectrum(coupling_matrix(c, Axis::x, periodic_tweezers(50, 5, 7.0)));
    CHECK((a.omega - b.omega).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.g - b.g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("instability and pinned-spectrum errors") {
    CouplingMatrix bad;
    bad.a = Eigen::MatrixXd::Constant(1, 1, -1.0);
    CHECK_THROWS_AS(spectrum(bad), InstabilityError);
    const Crystal c = crystal_of(5, 100.0);
    const CouplingMatrix a = coupling_matrix(c, Axis::z, {});
    CHECK_THROWS_AS(pinned_spectrum(a, {}), ConfigError);
    CHECK_THROWS_AS(pinned_spectrum(a, {0, 1, 2, 3, 4}), ConfigError);
    const ModeSpectrum one = pinned_spectrum(a, {0, 1, 3, 4});
    REQUIRE(one.size() == 1);
    CHECK(one.ions[0] == 2);
    CHECK(one.omega[0] == doctest::Approx(std::sqrt(a.a(2, 2))).epsilon(1e-14));
}

TEST_CASE("pinned cell matches an isolated cell with frozen walls") {
    const Crystal c = crystal_of(200, 230.0);
    const CouplingMatrix a = coupling_matrix(c, Axis::z, {});
    const TweezerLayout layout = periodic_tweezers(200, 10, 1.0);
    const ModeSpectrum pinned = pinned_spectrum(a, layout.indices());
    // Middle cell between walls 94 and 104, diagonalized on its own.
    const Eigen::MatrixXd cell = a.a.block(95, 95, 9, 9);
    CouplingMatrix small;
    small.a = cell;
    const ModeSpectrum iso = spectrum(small);
    // Only the long-range tail couples cells across a pinned wall, so each cell band reappears to ~1%.
    for (int k = 0; k < iso.size(); ++k) {
        const double gap = (pinned.omega.array() - iso.omega[k]).abs().minCoeff();
        CHECK(gap < 0.02 * iso.omega[k]);
    }
}

TEST_CASE("strong finite tweezers approach the pinned limit") {
    const Crystal c = crystal_of(300, 340.0);
    const UnitSystem u = derive_units(c.config);
    const double nu5 = 2 * constants::pi * 5e6 / u.omega0;
    const TweezerScan scan = tweezer_scan(c, Axis::z, {10}, {0.0, nu5});
    REQUIRE(scan.rows.size() == 3);
    CHECK(std::isinf(scan.rows[0].strength));
    CHECK(scan.rows[1].omega_lowest == doctest::Approx(scan.free_lowest).epsilon(1e-12));
    CHECK(scan.rows[2].omega_interior == doctest::Approx(scan.rows[0].omega_interior).epsilon(0.03));
    CHECK(scan.rows[2].omega_interior > 10 * scan.free_interior);
    CHECK(scan.convergence_strength.size() == 1);
}
