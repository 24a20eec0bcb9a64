#include "ionchain/cooling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "ionchain/errors.hpp"

namespace ionchain {

BathAssignment::BathAssignment(int n)
    : gamma(Eigen::VectorXd::Zero(n)),
      temperature(Eigen::VectorXd::Zero(n)),
      heating_product(Eigen::VectorXd::Zero(n)),
      role(n, BathRole::none) {}

void BathAssignment::set_coolant(int ion, double g, double t) {
    if (ion < 0 || ion >= size()) throw ConfigError("bath index out of range");
    if (g < 0.0) throw ConfigError("damping rate must be non-negative");
    if (t < 0.0) throw ConfigError("bath temperature must be non-negative");
    gamma[ion] = g;
    temperature[ion] = t;
    heating_product[ion] = 0.0;
    role[ion] = BathRole::coolant;
}

void BathAssignment::set_background(int ion, double product) {
    if (ion < 0 || ion >= size()) throw ConfigError("bath index out of range");
    if (product < 0.0) throw ConfigError("heating product must be non-negative");
    gamma[ion] = 0.0;
    temperature[ion] = std::numeric_limits<double>::infinity();
    heating_product[ion] = product;
    role[ion] = BathRole::background;
}

BathAssignment uniform_baths(int n, double gamma, double temperature) {
    BathAssignment b(n);
    for (int i = 0; i < n; ++i) b.set_coolant(i, gamma, temperature);
    return b;
}

double thermal_occupation_half(double nu, double temperature) {
    if (std::isinf(temperature)) return std::numeric_limits<double>::infinity();
    if (temperature <= 0.0) return 0.5;
    return 0.5 / std::tanh(nu / (2.0 * temperature));
}

static void require_full(const ModeSpectrum& modes, int n) {
    if (modes.size() != n || static_cast<int>(modes.ions.size()) != n)
        throw ConfigError("spectrum must cover every ion of the crystal");
}

DriftDiffusion drift_diffusion(const CouplingMatrix& a, const BathAssignment& baths,
                               const ModeSpectrum& modes, double eps) {
    const int n = static_cast<int>(a.a.rows());
    if (baths.size() != n) throw ConfigError("bath assignment does not match the crystal");
    require_full(modes, n);
    if ((baths.gamma.array() < 0.0).any()) throw ConfigError("negative damping rate");

    DriftDiffusion dd;
    dd.m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    dd.m.topRightCorner(n, n).setIdentity();
    dd.m.bottomLeftCorner(n, n) = -a.a;
    dd.m.bottomRightCorner(n, n).diagonal() = -baths.gamma;
    dd.d = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        double dpp = 0.0;
        if (baths.role[i] == BathRole::background) {
            dpp = 2.0 * baths.heating_product[i] * eps;
        } else if (baths.gamma[i] > 0.0) {
            double s = 0.0;
            for (int k = 0; k < n; ++k)
                s += modes.omega[k] * modes.g(i, k) * modes.g(i, k) *
                     thermal_occupation_half(modes.omega[k], baths.temperature[i]);
            dpp = 2.0 * baths.gamma[i] * eps * s;
        }
        dd.d(n + i, n + i) = dpp;
    }
    return dd;
}

CovarianceState thermal_covariance(const ModeSpectrum& modes, double temperature, double eps) {
    const int n = modes.size();
    require_full(modes, n);
    Eigen::VectorXd qx(n), qp(n);
    for (int k = 0; k < n; ++k) {
        const double nu = modes.omega[k];
        if (!(nu > 0.0))
            throw NumericError("mode " + std::to_string(k) + " has zero frequency: thermal variance diverges");
        const double occ = thermal_occupation_half(nu, temperature);
        qx[k] = eps * occ / nu;
        qp[k] = eps * occ * nu;
    }
    CovarianceState s;
    s.axis = modes.axis;
    s.sigma = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    s.sigma.topLeftCorner(n, n) = modes.g * qx.asDiagonal() * modes.g.transpose();
    s.sigma.bottomRightCorner(n, n) = modes.g * qp.asDiagonal() * modes.g.transpose();
    return s;
}

Propagator make_propagator(const Eigen::MatrixXd& m, const Eigen::MatrixXd& d, double step) {
    if (m.rows() != m.cols() || d.rows() != m.rows() || d.cols() != m.cols())
        throw ConfigError("drift and diffusion dimensions differ");
    if (!(step > 0.0)) throw ConfigError("time step must be positive");
    const Eigen::Index n = m.rows();
    const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm * step > 0.125) squarings = static_cast<int>(std::ceil(std::log2(norm * step / 0.125)));
    const double delta = std::ldexp(step, -squarings);

    // Taylor series on the small step for both the exponential and the noise integral.
    const Eigen::MatrixXd md = m * delta;
    Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd q = delta * d;
    Eigen::MatrixXd lterm = d;  // L^k(D) delta^k / (k+1)!
    Eigen::MatrixXd tmp(n, n);
    for (int k = 1; k <= 30; ++k) {
        tmp.noalias() = md * term;
        term = tmp / k;
        e += term;
        tmp.noalias() = md * lterm;
        lterm = (tmp + tmp.transpose()) / (k + 1);
        q += delta * lterm;
        if (term.cwiseAbs().maxCoeff() < 1e-18 && lterm.cwiseAbs().maxCoeff() <= 1e-18 * q.cwiseAbs().maxCoeff())
            break;
    }
    for (int s = 0; s < squarings; ++s) {
        tmp.noalias() = e * q;
        q.noalias() += tmp * e.transpose();
        q = 0.5 * (q + q.transpose()).eval();
        tmp.noalias() = e * e;
        e.swap(tmp);
    }
    return Propagator{std::move(e), std::move(q), step};
}

std::vector<CovarianceState> evolve(const CovarianceState& sigma0, const Eigen::MatrixXd& m,
                                    const Eigen::MatrixXd& d, double t_final, double sample_every) {
    if (sigma0.sigma.rows() != m.rows()) throw ConfigError("covariance and drift dimensions differ");
    if (!(sample_every > 0.0) || t_final < 0.0) throw ConfigError("invalid evolution times");
    const int steps = static_cast<int>(std::llround(t_final / sample_every));
    const Propagator p = make_propagator(m, d, sample_every);
    const double scale = std::max(sigma0.sigma.diagonal().maxCoeff(),
                                  p.noise.diagonal().maxCoeff() * std::max(steps, 1));
    std::vector<CovarianceState> out;
    out.reserve(steps + 1);
    CovarianceState s = sigma0;
    out.push_back(s);
    Eigen::MatrixXd tmp(m.rows(), m.cols());
    for (int k = 1; k <= steps; ++k) {
        tmp.noalias() = p.transition * s.sigma;
        s.sigma.noalias() = tmp * p.transition.transpose();
        s.sigma += p.noise;
        s.sigma = 0.5 * (s.sigma + s.sigma.transpose()).eval();
        s.time = sigma0.time + k * sample_every;
        if (s.sigma.diagonal().maxCoeff() > 1e6 * scale)
            throw NumericError("covariance grew beyond 1e6 of its initial scale at t = " + std::to_string(s.time));
        out.push_back(s);
    }
    return out;
}

CovarianceState steady_state(const Eigen::MatrixXd& m, const Eigen::MatrixXd& d, Axis axis) {
    using cd = std::complex<double>;
    const Eigen::Index n = m.rows();
    if (m.cols() != n || d.rows() != n || d.cols() != n) throw ConfigError("drift and diffusion dimensions differ");
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(m.cast<cd>());
    if (schur.info() != Eigen::Success) throw NumericError("Schur decomposition failed");
    const Eigen::MatrixXcd& t = schur.matrixT();
    const Eigen::MatrixXcd& u = schur.matrixU();
    const double tol = 1e-13 * std::max(1.0, m.cwiseAbs().colwise().sum().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i)
        if (t(i, i).real() >= -tol)
            throw SteadyStateError("drift matrix is not Hurwitz: an undamped mode has no steady state");

    const Eigen::MatrixXcd c = -(u.adjoint() * d.cast<cd>() * u);
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd rhs(n);
    for (Eigen::Index j = n - 1; j >= 0; --j) {
        rhs = c.col(j);
        const Eigen::Index tail = n - 1 - j;
        if (tail > 0) rhs.noalias() -= y.rightCols(tail) * t.row(j).tail(tail).adjoint();
        const cd shift = std::conj(t(j, j));
        for (Eigen::Index l = n - 1; l >= 0; --l) {
            const cd yl = rhs[l] / (t(l, l) + shift);
            y(l, j) = yl;
            if (l > 0) rhs.head(l).noalias() -= t.col(l).head(l) * yl;
        }
    }
    CovarianceState s;
    s.axis = axis;
    s.sigma = (u * y * u.adjoint()).real();
    s.sigma = 0.5 * (s.sigma + s.sigma.transpose()).eval();
    const double residual = (m * s.sigma + s.sigma * m.transpose() + d).norm();
    if (residual > 1e-8 * std::max(d.norm(), 1e-300))
        throw NumericError("Lyapunov residual " + std::to_string(residual) + " exceeds tolerance");
    return s;
}

Eigen::VectorXd position_fluctuations(const CovarianceState& s) {
    const int n = s.ions();
    Eigen::VectorXd pf(n);
    for (int i = 0; i < n; ++i) {
        const double v = s.sigma(i, i);
        if (v < -1e-12) throw NumericError("negative position variance on ion " + std::to_string(i));
        pf[i] = std::sqrt(std::max(v, 0.0));
    }
    return pf;
}

FluctuationMonitor::FluctuationMonitor(const CovarianceState& sigma0, Propagator propagator, std::vector<int> ions)
    : prop_(std::move(propagator)), ions_(std::move(ions)), sigma0_(sigma0.sigma), time_(sigma0.time) {
    const Eigen::Index dim = sigma0_.rows();
    if (prop_.transition.rows() != dim) throw ConfigError("propagator and covariance dimensions differ");
    w_ = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(ions_.size()));
    for (std::size_t c = 0; c < ions_.size(); ++c) {
        if (ions_[c] < 0 || ions_[c] >= dim / 2) throw ConfigError("monitored ion out of range");
        w_(ions_[c], static_cast<Eigen::Index>(c)) = 1.0;
    }
    noise_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ions_.size()));
    record();
}

void FluctuationMonitor::record() {
    const Eigen::MatrixXd sw = sigma0_ * w_;
    Eigen::VectorXd pf(w_.cols());
    for (Eigen::Index c = 0; c < w_.cols(); ++c) {
        const double v = w_.col(c).dot(sw.col(c)) + noise_[c];
        if (v < -1e-12) throw NumericError("negative position variance");
        pf[c] = std::sqrt(std::max(v, 0.0));
    }
    times_.push_back(time_);
    samples_.push_back(pf);
}

void FluctuationMonitor::advance(int steps) {
    Eigen::MatrixXd qw(w_.rows(), w_.cols());
    for (int s = 0; s < steps; ++s) {
        qw.noalias() = prop_.noise * w_;
        for (Eigen::Index c = 0; c < w_.cols(); ++c) noise_[c] += w_.col(c).dot(qw.col(c));
        qw.noalias() = prop_.transition.transpose() * w_;
        w_.swap(qw);
        time_ += prop_.step;
        record();
    }
}

Eigen::MatrixXd FluctuationMonitor::fluctuations() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(samples_.size()), static_cast<Eigen::Index>(ions_.size()));
    for (std::size_t r = 0; r < samples_.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = samples_[r].transpose();
    return out;
}

namespace {

struct LinearPart {
    double a = 0.0, s = 0.0, sse = 0.0;
};

// Best a, s for a fixed rate; t measured from the first sample.
LinearPart solve_linear(const std::vector<double>& t, const std::vector<double>& y, double rate) {
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(-rate * (t[i] - t[0]));
        s11 += e * e;
        s12 += e;
        s22 += 1.0;
        b1 += e * y[i];
        b2 += y[i];
    }
    LinearPart p;
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) < 1e-300) {
        p.sse = std::numeric_limits<double>::infinity();
        return p;
    }
    p.a = (s22 * b1 - s12 * b2) / det;
    p.s = (s11 * b2 - s12 * b1) / det;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - p.a * std::exp(-rate * (t[i] - t[0])) - p.s;
        p.sse += r * r;
    }
    return p;
}

}  // namespace

RelaxationFit fit_relaxation(const std::vector<double>& t, const std::vector<double>& y, bool require_span) {
    if (t.size() != y.size()) throw ConfigError("relaxation fit: t and pf differ in length");
    if (t.size() < 10) throw FitError("relaxation fit needs at least 10 samples");
    const double span = t.back() - t.front();
    if (!(span > 0.0)) throw FitError("relaxation fit needs increasing times");

    // Variable projection: scan log(tau), refine by golden section, polish with Gauss-Newton.
    const int grid = 241;
    const double lo = std::log(span * 1e-3), hi = std::log(span * 1e3);
    auto sse_of = [&](double log_tau) { return solve_linear(t, y, std::exp(-log_tau)).sse; };
    int best = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int g = 0; g < grid; ++g) {
        const double v = sse_of(lo + (hi - lo) * g / (grid - 1));
        if (v < best_sse) {
            best_sse = v;
            best = g;
        }
    }
    if (best == 0 || best == grid - 1) throw FitError("relaxation fit degenerate: no resolvable decay");
    const double hstep = (hi - lo) / (grid - 1);
    double a = lo + (best - 1) * hstep, b = lo + (best + 1) * hstep;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = sse_of(c), fd = sse_of(d);
    for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a); fc = sse_of(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a); fd = sse_of(d);
        }
    }
    double rate = std::exp(-0.5 * (a + b));
    LinearPart lin = solve_linear(t, y, rate);
    double amp = lin.a, steady = lin.s;

    // Gauss-Newton in (amp, rate, steady) with step halving.
    const std::size_t n = t.size();
    double sse = lin.sse;
    for (int it = 0; it < 30; ++it) {
        Eigen::MatrixXd jac(n, 3);
        Eigen::VectorXd res(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dt = t[i] - t[0];
            const double e = std::exp(-rate * dt);
            res[i] = y[i] - amp * e - steady;
            jac(i, 0) = e;
            jac(i, 1) = -amp * dt * e;
            jac(i, 2) = 1.0;
        }
        const Eigen::Vector3d step = jac.colPivHouseholderQr().solve(res);
        double lambda = 1.0;
        bool improved = false;
        for (int h = 0; h < 30; ++h) {
            const double na = amp + lambda * step[0], nr = rate + lambda * step[1], ns = steady + lambda * step[2];
            if (nr > 0.0) {
                double v = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = y[i] - na * std::exp(-nr * (t[i] - t[0])) - ns;
                    v += r * r;
                }
                if (v <= sse) {
                    improved = v < sse;
                    amp = na; rate = nr; steady = ns; sse = v;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!improved || std::abs(step[1]) < 1e-15 * rate) break;
    }

    RelaxationFit f;
    f.tau = 1.0 / rate;
    f.a = amp * std::exp(rate * t[0]);
    f.steady = steady;
    f.rms_residual = std::sqrt(sse / n);
    f.span = span;
    if (amp == 0.0) throw FitError("relaxation fit degenerate: zero amplitude");
    if (require_span && span < 2.0 * f.tau)
        throw FitError("relaxation fit: data span fewer than two e-foldings");
    return f;
}

CoolingResult run_cooling(const Crystal& crystal, const CoolingRun& run, double eps) {
    const int n = crystal.size();
    validate(run.tweezers, n);
    std::set<int> pinned;
    for (int i : run.tweezers.indices()) pinned.insert(i);
    std::set<int> seen;
    for (int i : run.coolants) {
        if (i < 0 || i >= n) throw ConfigError("coolant index out of range");
        if (pinned.count(i)) throw ConfigError("ion " + std::to_string(i) + " is both coolant and tweezered");
        if (!seen.insert(i).second) throw ConfigError("duplicate coolant index");
    }
    if (!(run.window > 0.0) || run.samples < 10) throw ConfigError("cooling window needs positive time and >= 10 samples");
    if (!(run.coolant_temperature > 0.0) || !(run.initial_temperature > 0.0))
        throw ConfigError("cooling temperatures must be positive");

    const CouplingMatrix a = coupling_matrix(crystal, run.axis, run.tweezers);
    const ModeSpectrum modes = spectrum(a);
    BathAssignment baths(n);
    for (int i = 0; i < n; ++i) baths.set_background(i, run.background_product);
    for (int i : run.coolants) baths.set_coolant(i, run.coolant_gamma, run.coolant_temperature);
    const DriftDiffusion dd = drift_diffusion(a, baths, modes, eps);
    CovarianceState sigma0 = thermal_covariance(modes, run.initial_temperature, eps);

    std::vector<int> ions{run.primary_ion};
    for (int i : run.monitored)
        if (i != run.primary_ion) ions.push_back(i);
    for (int i : ions)
        if (i < 0 || i >= n) throw ConfigError("monitored ion out of range");

    FluctuationMonitor monitor(sigma0, make_propagator(dd.m, dd.d, run.window / run.samples), ions);
    monitor.advance(run.samples);
    int steps = run.samples;

    CoolingResult out;
    out.axis = run.axis;
    out.ions = ions;
    auto fit_column = [&](int c, bool strict) {
        const Eigen::MatrixXd pf = monitor.fluctuations();
        std::vector<double> y(pf.rows());
        for (Eigen::Index r = 0; r < pf.rows(); ++r) y[r] = pf(r, c);
        return fit_relaxation(monitor.times(), y, strict);
    };
    for (int doubling = 0;; ++doubling) {
        bool done = false;
        try {
            const RelaxationFit f = fit_column(0, false);
            done = f.span >= run.min_relaxations * f.tau;
        } catch (const FitError&) {
        }
        if (done || doubling >= run.max_doublings) break;
        monitor.advance(steps);
        steps *= 2;
    }
    out.t = monitor.times();
    out.pf = monitor.fluctuations();
    for (std::size_t c = 0; c < ions.size(); ++c) {
        try {
            out.fits.push_back(fit_column(static_cast<int>(c), false));
        } catch (const FitError&) {
            out.fits.push_back(std::nullopt);
        }
    }
    if (out.fits[0]) {
        out.fit = *out.fits[0];
        out.fit_converged = out.fit.span >= run.min_relaxations * out.fit.tau;
    }
    const Eigen::VectorXd ref = position_fluctuations(thermal_covariance(modes, run.coolant_temperature, eps));
    out.reference_pf.resize(static_cast<Eigen::Index>(ions.size()));
    for (std::size_t c = 0; c < ions.size(); ++c) out.reference_pf[c] = ref[ions[c]];
    return out;
}

std::vector<int> cell_walls(const LocalCellSpec& spec) {
    if (spec.wall_thickness < 1) throw ConfigError("wall thickness must be at least 1");
    if (spec.cell_last < spec.cell_first) throw ConfigError("cell span is empty");
    std::vector<int> walls;
    for (int k = spec.wall_thickness; k >= 1; --k) walls.push_back(spec.cell_first - k);
    for (int k = 1; k <= spec.wall_thickness; ++k) walls.push_back(spec.cell_last + k);
    return walls;
}

LocalCellReport local_cell_scenario(const Crystal& crystal, const LocalCellSpec& spec, double eps) {
    LocalCellReport report;
    report.walls = cell_walls(spec);
    for (int w : report.walls)
        if (w < 0 || w >= crystal.size()) throw ConfigError("cell wall outside the crystal");
    for (int c : spec.coolants)
        if (c < spec.cell_first || c > spec.cell_last) throw ConfigError("coolant outside the cell");
    if (!(spec.tweezer_nu > 0.0)) throw ConfigError("wall tweezer frequency must be positive");

    for (Axis axis : spec.axes) {
        CoolingRun run;
        run.axis = axis;
        run.tweezers = tweezers_at(report.walls, spec.tweezer_nu);
        run.coolants = spec.coolants;
        run.coolant_gamma = spec.coolant_gamma;
        run.coolant_temperature = spec.coolant_temperature;
        run.background_product = spec.background_product;
        run.initial_temperature = spec.initial_temperature;
        run.window = spec.window;
        run.samples = spec.samples;
        run.primary_ion = spec.monitor_ion;
        run.monitored = spec.outside_ions;

        LocalCellAxisReport ax;
        ax.run = run_cooling(crystal, run, eps);
        const double interior = ax.run.fit_converged ? ax.run.fit.steady : ax.run.pf(ax.run.pf.rows() - 1, 0);
        ax.interior_ratio = interior / ax.run.reference_pf[0];
        for (std::size_t c = 1; c < ax.run.ions.size(); ++c) {
            const Eigen::Index col = static_cast<Eigen::Index>(c);
            ax.outside_ratio.push_back(ax.run.pf(ax.run.pf.rows() - 1, col) / ax.run.reference_pf[col]);
            bool monotone = true;
            for (Eigen::Index r = 1; r < ax.run.pf.rows(); ++r)
                if (ax.run.pf(r, col) < ax.run.pf(r - 1, col) * (1.0 - 1e-9)) monotone = false;
            ax.outside_monotone.push_back(monotone);
        }
        report.axes.push_back(std::move(ax));
    }
    return report;
}

}  // namespace ionchain
