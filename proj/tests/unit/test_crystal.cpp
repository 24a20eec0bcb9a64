#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "ionchain/crystal.hpp"
#include "ionchain/errors.hpp"

using namespace ionchain;

namespace {
TrapConfig small_trap(int n, double length_d0) {
    TrapConfig c;
    c.n_ions = n;
    c.length = length_d0 * c.d0;
    return c;
}
}  // namespace

TEST_CASE("bookend potential is symmetric with analytic derivatives") {
    const DimensionlessTrap t = dimensionless(TrapConfig{});
    for (double z : {0.0, 13.0, 700.0, 999.0, 1000.0, 1003.0, 1500.0}) {
        CHECK(bookend_potential(z, t).u == doctest::Approx(bookend_potential(-z, t).u).epsilon(1e-13));
        CHECK(bookend_potential(z, t).d2u == doctest::Approx(bookend_potential(-z, t).d2u).epsilon(1e-12));
    }
    CHECK(std::abs(bookend_potential(0.0, t).du) < 1e-14);
    // Finite-difference oracle at z = 0.4 L.
    const double z = 0.4 * t.length, h = 1e-3;
    const double fd1 = (bookend_potential(z + h, t).u - bookend_potential(z - h, t).u) / (2 * h);
    CHECK(bookend_potential(z, t).du == doctest::Approx(fd1).epsilon(1e-6));
    const double fd2 = (bookend_potential(z + h, t).du - bookend_potential(z - h, t).du) / (2 * h);
    CHECK(bookend_potential(z, t).d2u == doctest::Approx(fd2).epsilon(1e-6));
    // Continuous across the bookend position and steep there.
    const double edge = 0.5 * t.length;
    CHECK(std::abs(bookend_potential(edge + 1e-9, t).u - bookend_potential(edge - 1e-9, t).u) < 1e-6);
    CHECK(bookend_potential(0.0, t).d2u > 0.0);
    CHECK(bookend_potential(edge - 5.0, t).d2u > 1e3 * bookend_potential(0.0, t).d2u);
}

TEST_CASE("energy gradient and Hessian agree with finite differences") {
    const DimensionlessTrap t = dimensionless(small_trap(7, 100.0));
    Eigen::VectorXd u(7);
    u << -40.1, -27.3, -12.0, 0.4, 11.8, 30.2, 44.9;
    const Eigen::VectorXd g = energy_gradient(u, t);
    const Eigen::MatrixXd h = energy_hessian(u, t);
    const double step = 1e-5;
    const double hscale = h.cwiseAbs().maxCoeff();
    for (int i = 0; i < 7; ++i) {
        Eigen::VectorXd up = u, dn = u;
        up[i] += step;
        dn[i] -= step;
        const double fd = (total_energy(up, t) - total_energy(dn, t)) / (2 * step);
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
        const Eigen::VectorXd fdg = (energy_gradient(up, t) - energy_gradient(dn, t)) / (2 * step);
        for (int j = 0; j < 7; ++j) CHECK(h(j, i) == doctest::Approx(fdg[j]).epsilon(1e-6).scale(hscale));
    }
}

TEST_CASE("single and two-ion equilibria") {
    const Crystal one = solve_equilibrium(small_trap(1, 100.0));
    REQUIRE(one.size() == 1);
    CHECK(one.u[0] == 0.0);
    const Crystal two = solve_equilibrium(small_trap(2, 100.0));
    CHECK(two.grad_norm < 1e-10);
    CHECK(two.u[0] == doctest::Approx(-two.u[1]).epsilon(1e-14));
    // Force balance: U'(s) = 1/(2s)^2.
    const DimensionlessTrap t = dimensionless(small_trap(2, 100.0));
    const double s = two.u[1];
    CHECK(bookend_potential(s, t).du == doctest::Approx(1.0 / (4 * s * s)).epsilon(1e-8));
}

TEST_CASE("equilibrium invariants on a 300-ion crystal") {
    const TrapConfig c = small_trap(300, 340.0);
    const DimensionlessTrap t = dimensionless(c);
    const Crystal x = solve_equilibrium(c);
    CHECK(x.grad_norm <= 1e-10);
    CHECK(energy_gradient(x.u, t).cwiseAbs().maxCoeff() <= 1e-10);
    for (int i = 1; i < x.size(); ++i) CHECK(x.u[i] > x.u[i - 1]);
    for (int i = 0; i < x.size(); ++i) CHECK(std::abs(x.u[i] + x.u[x.size() - 1 - i]) < 1e-8);
    CHECK(std::abs(x.u.sum()) < 1e-8 * x.size());
    const Eigen::VectorXd uniform = Eigen::VectorXd::LinSpaced(300, -149.5, 149.5);
    CHECK(total_energy(x.u, t) <= total_energy(uniform, t));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(energy_hessian(x.u, t), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9);
}

TEST_CASE("tweezers do not shift the equilibrium") {
    const TrapConfig c = small_trap(60, 80.0);
    const Crystal a = solve_equilibrium(c);
    const Crystal b = solve_equilibrium(c, periodic_tweezers(60, 10, 5.0));
    CHECK((a.u - b.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.tweezers.pinned.size() == 6);
}

TEST_CASE("solver failures are reported") {
    TrapConfig c = small_trap(20, 100.0);
    Eigen::VectorXd guess = Eigen::VectorXd::LinSpaced(20, -9.5, 9.5);
    guess[5] = guess[4];
    CHECK_THROWS_AS(solve_equilibrium(c, {}, guess), InstabilityError);
    SolverOptions opt;
    opt.max_iterations = 1;
    CHECK_THROWS_AS(solve_equilibrium(c, {}, std::nullopt, opt), ConvergenceError);
    try {
        solve_equilibrium(c, {}, std::nullopt, opt);
    } catch (const ConvergenceError& e) {
        CHECK(e.residual() > 1e-10);
    }
}

TEST_CASE("spacing statistics") {
    const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(50, 0.0, 49.0);
    const SpacingStats s = spacing_stats(u);
    CHECK(s.sigma_d == doctest::Approx(0.0).scale(1.0));
    CHECK(s.mean_spacing == doctest::Approx(1.0));
    CHECK(s.first_ion == 5);
    CHECK(s.last_ion == 44);
    int total = 0;
    for (const auto& [x, k] : s.histogram) total += k;
    CHECK(total == 39);
    Eigen::VectorXd tiny(1);
    tiny << 0.0;
    CHECK_THROWS_AS(spacing_stats(tiny), ConfigError);
}

TEST_CASE("calibration") {
    const TrapConfig base;
    const int n100 = calibrate_count(100.0, base);
    CHECK(n100 < 100);
    CHECK(n100 > 10);
    const int n150 = calibrate_count(150.0, base);
    const int n200 = calibrate_count(200.0, base);
    CHECK(n100 <= n150);
    CHECK(n150 <= n200);
    CHECK_THROWS_AS(calibrate_count(50.0, base), ConfigError);

    const double l = calibrate_length(50, base);
    TrapConfig c = base;
    c.n_ions = 50;
    c.length = l * c.d0;
    CHECK(spacing_stats(solve_equilibrium(c)).mean_spacing == doctest::Approx(1.0).epsilon(1e-8));
    // Calibrating the count back at that length recovers the ion number.
    REQUIRE(l >= 100.0);
    CHECK(std::abs(calibrate_count(l, base) - 50) <= 1);
}
