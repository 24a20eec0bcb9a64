#include "ionchain/modespec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ionchain/errors.hpp"

namespace ionchain {

double coupling_constant(Axis axis) { return axis == Axis::z ? 2.0 : -1.0; }

CouplingMatrix coupling_matrix(const Eigen::VectorXd& u, Axis axis, const Eigen::VectorXd& base_nu2,
                               const Eigen::VectorXd& tweezer_nu2) {
    const Eigen::Index n = u.size();
    if (base_nu2.size() != n || tweezer_nu2.size() != n)
        throw ConfigError("coupling matrix inputs differ in length");
    CouplingMatrix m;
    m.axis = axis;
    m.c = coupling_constant(axis);
    m.a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double d = std::abs(u[i] - u[j]);
            if (!(d > 0.0)) throw InstabilityError("coincident ion positions");
            const double k = m.c / (d * d * d);
            m.a(i, j) = -k;
            m.a(j, i) = -k;
            row_sum[i] += k;
            row_sum[j] += k;
        }
    }
    m.a.diagonal() = base_nu2 + row_sum + tweezer_nu2;
    return m;
}

CouplingMatrix coupling_matrix(const Crystal& crystal, Axis axis, const TweezerLayout& tweezers) {
    const int n = crystal.size();
    validate(tweezers, n);
    const DimensionlessTrap trap = dimensionless(crystal.config);
    Eigen::VectorXd base(n), ot = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        switch (axis) {
            case Axis::x: base[i] = trap.nu_x * trap.nu_x; break;
            case Axis::y: base[i] = trap.nu_y * trap.nu_y; break;
            case Axis::z: base[i] = bookend_potential(crystal.u[i], trap).d2u; break;
        }
    }
    for (const auto& p : tweezers.pinned) {
        const double nu = tweezers.nu(p.index, axis);
        ot[p.index] = nu * nu;
    }
    return coupling_matrix(crystal.u, axis, base, ot);
}

CouplingMatrix lattice_cell_matrix(int n, Axis axis, double base_nu2) {
    if (n < 1) throw ConfigError("cell needs at least one ion");
    constexpr double zeta3 = 1.2020569031595942;
    CouplingMatrix m;
    m.axis = axis;
    m.c = coupling_constant(axis);
    m.a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = std::abs(i - j);
            m.a(i, j) = -m.c / (d * d * d);
        }
        m.a(i, i) = base_nu2 + 2.0 * zeta3 * m.c;
    }
    return m;
}

static ModeSpectrum diagonalize(const Eigen::MatrixXd& a, Axis axis, std::vector<int> ions) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver did not converge");
    const Eigen::VectorXd& lam = es.eigenvalues();
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        if (lam[k] < -1e-9)
            throw InstabilityError("negative eigenvalue " + std::to_string(lam[k]) + " on axis " +
                                   axis_name(axis) + ": crystal is not a local minimum");
    }
    ModeSpectrum s;
    s.axis = axis;
    s.omega = lam.cwiseMax(0.0).cwiseSqrt();
    s.g = es.eigenvectors();
    // Fix the sign of each mode so output is reproducible: largest component positive.
    for (Eigen::Index k = 0; k < s.g.cols(); ++k) {
        Eigen::Index imax;
        s.g.col(k).cwiseAbs().maxCoeff(&imax);
        if (s.g(imax, k) < 0) s.g.col(k) *= -1.0;
    }
    s.ions = std::move(ions);
    return s;
}

ModeSpectrum spectrum(const CouplingMatrix& a) {
    const int n = static_cast<int>(a.a.rows());
    if (a.a.cols() != n) throw ConfigError("coupling matrix is not square");
    if (!a.a.isApprox(a.a.transpose(), 1e-12)) throw ConfigError("coupling matrix is not symmetric");
    std::vector<int> ions(n);
    for (int i = 0; i < n; ++i) ions[i] = i;
    return diagonalize(a.a, a.axis, std::move(ions));
}

ModeSpectrum pinned_spectrum(const CouplingMatrix& a, const std::vector<int>& pinned) {
    const int n = static_cast<int>(a.a.rows());
    if (pinned.empty()) throw ConfigError("pinned set is empty");
    std::set<int> frozen;
    for (int i : pinned) {
        if (i < 0 || i >= n) throw ConfigError("pinned index out of range");
        frozen.insert(i);
    }
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (!frozen.count(i)) keep.push_back(i);
    if (keep.empty()) throw ConfigError("all ions pinned: empty spectrum");
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index r = 0; r < m; ++r) sub(r, c) = a.a(keep[r], keep[c]);
    return diagonalize(sub, a.axis, std::move(keep));
}

ModeSpectrum pinned_spectrum(const Crystal& crystal, Axis axis, const std::vector<int>& pinned) {
    return pinned_spectrum(coupling_matrix(crystal, axis, TweezerLayout{}), pinned);
}

double lowest_interior_frequency(const ModeSpectrum& modes, int n_ions, double middle_fraction) {
    const int trim = static_cast<int>(std::lround(n_ions * (1.0 - middle_fraction) / 2.0));
    Eigen::VectorXd inside(modes.ions.size());
    for (std::size_t r = 0; r < modes.ions.size(); ++r)
        inside[r] = (modes.ions[r] >= trim && modes.ions[r] < n_ions - trim) ? 1.0 : 0.0;
    for (int k = 0; k < modes.size(); ++k) {
        const double w = inside.dot(modes.g.col(k).cwiseAbs2());
        if (w > 0.5) return modes.omega[k];
    }
    throw NumericError("no interior-dominated mode found");
}

TweezerScan tweezer_scan(const Crystal& crystal, Axis axis, const std::vector<int>& periods,
                         const std::vector<double>& strengths, bool include_pinned) {
    const int n = crystal.size();
    const CouplingMatrix free = coupling_matrix(crystal, axis, TweezerLayout{});
    TweezerScan scan;
    {
        const ModeSpectrum s = spectrum(free);
        scan.free_lowest = s.omega[0];
        scan.free_interior = lowest_interior_frequency(s, n);
    }
    std::vector<double> fit_p, fit_w;
    for (int p : periods) {
        if (p < 2) throw ConfigError("tweezer period must be at least 2");
        const TweezerLayout layout = periodic_tweezers(n, p, 1.0);
        double pinned_interior = std::numeric_limits<double>::quiet_NaN();
        if (include_pinned) {
            const ModeSpectrum s = pinned_spectrum(free, layout.indices());
            ScanRow row{p, std::numeric_limits<double>::infinity(), s.omega[0],
                        lowest_interior_frequency(s, n)};
            pinned_interior = row.omega_interior;
            scan.rows.push_back(row);
            fit_p.push_back(p);
            fit_w.push_back(row.omega_interior);
        }
        double converged = std::numeric_limits<double>::quiet_NaN();
        for (double nu : strengths) {
            if (nu < 0.0) throw ConfigError("tweezer strength must be non-negative");
            CouplingMatrix a = free;
            if (axis != layout.incident_axis)
                for (int i : layout.indices()) a.a(i, i) += nu * nu;
            const ModeSpectrum s = spectrum(a);
            ScanRow row{p, nu, s.omega[0], lowest_interior_frequency(s, n)};
            scan.rows.push_back(row);
            if (std::isnan(converged) && std::isfinite(pinned_interior) &&
                std::abs(row.omega_interior - pinned_interior) <= 0.01 * pinned_interior)
                converged = nu;
        }
        scan.convergence_strength.emplace_back(p, converged);
    }
    if (fit_p.size() >= 4) scan.pinned_fit = fit_power_law(fit_p, fit_w);
    return scan;
}

}  // namespace ionchain
