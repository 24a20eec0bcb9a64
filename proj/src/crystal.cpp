#include "ionchain/crystal.hpp"

#include <algorithm>
#include <cmath>

#include "ionchain/errors.hpp"

namespace ionchain {

BookendValue bookend_potential(double z, const DimensionlessTrap& trap) {
    const double h = trap.h;
    const double a = z + 0.5 * trap.length;
    const double b = z - 0.5 * trap.length;
    const double ha = h * h + a * a;
    const double hb = h * h + b * b;
    BookendValue v;
    v.u = trap.kappa * (constants::pi - std::atan(a / h) + std::atan(b / h));
    v.du = trap.kappa * (-h / ha + h / hb);
    v.d2u = trap.kappa * (2.0 * h * a / (ha * ha) - 2.0 * h * b / (hb * hb));
    return v;
}

double total_energy(const Eigen::VectorXd& u, const DimensionlessTrap& trap) {
    const Eigen::Index n = u.size();
    double e = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        e += bookend_potential(u[i], trap).u;
        for (Eigen::Index j = i + 1; j < n; ++j) e += 1.0 / std::abs(u[i] - u[j]);
    }
    return e;
}

Eigen::VectorXd energy_gradient(const Eigen::VectorXd& u, const DimensionlessTrap& trap) {
    const Eigen::Index n = u.size();
    Eigen::VectorXd g(n);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = bookend_potential(u[i], trap).du;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = u[i] - u[j];
            const double f = (d > 0 ? 1.0 : -1.0) / (d * d);
            g[i] -= f;
            g[j] += f;
        }
    }
    return g;
}

Eigen::MatrixXd energy_hessian(const Eigen::VectorXd& u, const DimensionlessTrap& trap) {
    const Eigen::Index n = u.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) h(i, i) = bookend_potential(u[i], trap).d2u;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double d = std::abs(u[i] - u[j]);
            const double k = 2.0 / (d * d * d);
            h(i, j) = -k;
            h(j, i) = -k;
            h(i, i) += k;
            h(j, j) += k;
        }
    }
    return h;
}

static double min_spacing(const Eigen::VectorXd& u) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 1; i < u.size(); ++i) m = std::min(m, u[i] - u[i - 1]);
    return m;
}

Crystal solve_equilibrium(const TrapConfig& config, const TweezerLayout& tweezers,
                          const std::optional<Eigen::VectorXd>& initial_guess,
                          const SolverOptions& opt) {
    const DimensionlessTrap trap = dimensionless(config);
    const int n = config.n_ions;
    validate(tweezers, n);

    Eigen::VectorXd u;
    if (initial_guess) {
        if (initial_guess->size() != n) throw ConfigError("initial guess has the wrong length");
        u = *initial_guess;
        std::sort(u.begin(), u.end());
    } else {
        u = Eigen::VectorXd::LinSpaced(n, -(n - 1) / 2.0, (n - 1) / 2.0);
    }
    if (n > 1 && min_spacing(u) < opt.min_spacing)
        throw InstabilityError("initial guess has colliding ions");

    Crystal c;
    c.config = config;
    c.tweezers = tweezers;
    double gnorm = 0.0;
    for (int it = 0; it <= opt.max_iterations; ++it) {
        // The potential is mirror symmetric; keep the iterate exactly symmetric.
        u = 0.5 * (u - u.reverse()).eval();
        const Eigen::VectorXd g = energy_gradient(u, trap);
        gnorm = g.cwiseAbs().maxCoeff();
        if (gnorm <= opt.tolerance) {
            c.u = u;
            c.grad_norm = gnorm;
            c.iterations = it;
            return c;
        }
        if (it == opt.max_iterations) break;

        Eigen::MatrixXd h = energy_hessian(u, trap);
        Eigen::VectorXd step;
        double shift = 0.0;
        const double scale = h.diagonal().cwiseAbs().maxCoeff();
        for (;;) {
            Eigen::LLT<Eigen::MatrixXd> llt(h);
            if (llt.info() == Eigen::Success) {
                step = -llt.solve(g);
                break;
            }
            const double next = shift == 0.0 ? 1e-6 * scale : 4.0 * shift;
            h.diagonal().array() += next - shift;
            shift = next;
            if (shift > 1e12 * std::max(scale, 1.0))
                throw ConvergenceError("equilibrium Hessian could not be regularized", gnorm);
        }

        double t = 1.0;
        Eigen::VectorXd trial = u + step;
        int halvings = 0;
        while (n > 1 && min_spacing(trial) < opt.min_spacing) {
            if (++halvings > 60) throw InstabilityError("ion collision during equilibrium solve");
            t *= 0.5;
            trial = u + t * step;
        }
        u = trial;
    }
    throw ConvergenceError("equilibrium solve did not converge in " +
                               std::to_string(opt.max_iterations) + " iterations",
                           gnorm);
}

SpacingStats spacing_stats(const Eigen::VectorXd& u, double middle_fraction, int bins) {
    if (!(middle_fraction > 0.0 && middle_fraction <= 1.0))
        throw ConfigError("middle_fraction must lie in (0, 1]");
    const int n = static_cast<int>(u.size());
    const int trim = static_cast<int>(std::lround(n * (1.0 - middle_fraction) / 2.0));
    const int first = trim;
    const int last = n - 1 - trim;
    if (last - first + 1 < 3) throw ConfigError("too few interior ions for spacing statistics");

    Eigen::VectorXd d = u.segment(first + 1, last - first) - u.segment(first, last - first);
    SpacingStats s;
    s.middle_fraction = middle_fraction;
    s.first_ion = first;
    s.last_ion = last;
    s.mean_spacing = d.mean();
    s.sigma_d = std::sqrt((d.array() - s.mean_spacing).square().mean());

    if (bins > 0) {
        const double lo = d.minCoeff();
        const double hi = d.maxCoeff();
        const double width = hi > lo ? (hi - lo) / bins : 1.0;
        std::vector<int> counts(bins, 0);
        for (double x : d) {
            int k = hi > lo ? static_cast<int>((x - lo) / width) : 0;
            counts[std::clamp(k, 0, bins - 1)]++;
        }
        for (int k = 0; k < bins; ++k) s.histogram.emplace_back(lo + (k + 0.5) * width, counts[k]);
    }
    return s;
}

static double mean_spacing_for(int n, double length_d0, const TrapConfig& base) {
    TrapConfig c = base;
    c.n_ions = n;
    c.length = length_d0 * base.d0;
    return spacing_stats(solve_equilibrium(c).u, 0.8, 0).mean_spacing;
}

int calibrate_count(double length_d0, const TrapConfig& config) {
    if (!(length_d0 >= 100.0)) throw ConfigError("calibrate_count requires L >= 100 d0");
    // Mean interior spacing decreases with N; bracket generously since
    // short crystals are edge dominated.
    int lo = std::max(8, static_cast<int>(0.25 * length_d0));
    int hi = static_cast<int>(std::ceil(1.05 * length_d0)) + 10;
    double m_lo = mean_spacing_for(lo, length_d0, config);
    double m_hi = mean_spacing_for(hi, length_d0, config);
    if (!(m_lo >= 1.0 && m_hi < 1.0))
        throw ConvergenceError("calibrate_count search bracket exhausted", m_lo - 1.0);
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        const double m = mean_spacing_for(mid, length_d0, config);
        if (m >= 1.0) {
            lo = mid;
            m_lo = m;
        } else {
            hi = mid;
            m_hi = m;
        }
    }
    return std::abs(m_lo - 1.0) <= std::abs(m_hi - 1.0) ? lo : hi;
}

double calibrate_length(int n_ions, const TrapConfig& config, double rel_tol) {
    if (n_ions < 5) throw ConfigError("calibrate_length needs at least 5 ions");
    double lo = 0.9 * n_ions;
    double hi = 4.0 * n_ions + 60.0;
    double f_lo = mean_spacing_for(n_ions, lo, config) - 1.0;
    double f_hi = mean_spacing_for(n_ions, hi, config) - 1.0;
    if (!(f_lo < 0.0 && f_hi > 0.0))
        throw ConvergenceError("calibrate_length search bracket exhausted", f_lo);
    // Illinois-modified regula falsi on the smooth spacing curve.
    int side = 0;
    for (int it = 0; it < 200; ++it) {
        const double x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        const double f = mean_spacing_for(n_ions, x, config) - 1.0;
        if (std::abs(f) < 1e-13 || (hi - lo) < rel_tol * x) return x;
        if (f < 0.0) {
            lo = x;
            f_lo = f;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = x;
            f_hi = f;
            if (side == 1) f_lo *= 0.5;
            side = 1;
        }
        if (std::abs(f) < rel_tol) return x;
    }
    throw ConvergenceError("calibrate_length did not converge", f_lo);
}

}  // namespace ionchain
