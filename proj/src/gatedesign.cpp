#include "ionchain/gatedesign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ionchain/cooling.hpp"
#include "ionchain/errors.hpp"

namespace ionchain {

using cd = std::complex<double>;

namespace {

// First divided difference of exp at z0, z1.
cd exp_dd2(cd z0, cd z1) {
    const cd d = z1 - z0;
    if (std::abs(d) < 1e-3) {
        cd sum = 0.0, term = 1.0;
        double fact = 1.0;
        for (int n = 0; n < 12; ++n) {
            fact *= (n + 1);
            sum += term / fact;
            term *= d;
        }
        return std::exp(z0) * sum;
    }
    return (std::exp(z1) - std::exp(z0)) / d;
}

// Second divided difference of exp at z0, z1, z2.
cd exp_dd3(cd z0, cd z1, cd z2) {
    const cd z[3] = {z0, z1, z2};
    int a = 0, b = 1;
    double gap = std::abs(z[0] - z[1]);
    if (std::abs(z[0] - z[2]) > gap) { a = 0; b = 2; gap = std::abs(z[0] - z[2]); }
    if (std::abs(z[1] - z[2]) > gap) { a = 1; b = 2; gap = std::abs(z[1] - z[2]); }
    if (gap > 0.1) {
        const int c = 3 - a - b;
        return (exp_dd2(z[c], z[b]) - exp_dd2(z[a], z[c])) / (z[b] - z[a]);
    }
    // Clustered nodes: exp(c) * sum_n h_n(d) / (n+2)! with h_n complete homogeneous.
    const cd centre = (z0 + z1 + z2) / 3.0;
    const cd d0 = z0 - centre, d1 = z1 - centre, d2 = z2 - centre;
    constexpr int order = 16;
    // h_n(d1, d2) then h_n(d0, d1, d2) = sum_i d0^i h_{n-i}(d1, d2).
    cd h12[order + 1];
    for (int n = 0; n <= order; ++n) {
        cd s = 0.0, p1 = 1.0;
        for (int i = 0; i <= n; ++i) {
            s += p1 * std::pow(d2, n - i);
            p1 *= d1;
        }
        h12[n] = s;
    }
    cd sum = 0.0;
    double fact = 1.0;  // (n+2)!
    for (int n = 0; n <= order; ++n) {
        fact *= (n == 0 ? 2.0 : (n + 2));
        cd h = 0.0, p0 = 1.0;
        for (int i = 0; i <= n; ++i) {
            h += p0 * h12[n - i];
            p0 *= d0;
        }
        sum += h / fact;
    }
    return std::exp(centre) * sum;
}

struct SegmentTables {
    Eigen::MatrixXcd drive;  // segments x modes
    Eigen::MatrixXd phase;   // segments x modes
};

SegmentTables segment_tables(const GateSpec& spec, const ModeSpectrum& modes, double mu, bool with_phase) {
    const int m = spec.segments;
    const int k = modes.size();
    SegmentTables t;
    t.drive.resize(m, k);
    if (with_phase) t.phase.resize(m, k);
    const double width = spec.t_g / m;
    for (int s = 0; s < m; ++s) {
        const double t0 = s * width;
        for (int q = 0; q < k; ++q) {
            t.drive(s, q) = segment_drive_integral(t0, t0 + width, mu, modes.omega[q]);
            if (with_phase) t.phase(s, q) = segment_phase_integral(t0, t0 + width, mu, modes.omega[q]);
        }
    }
    return t;
}

std::pair<int, int> target_rows(const GateSpec& spec, const ModeSpectrum& modes) {
    int ri = -1, rj = -1;
    for (std::size_t r = 0; r < modes.ions.size(); ++r) {
        if (modes.ions[r] == spec.ion_i) ri = static_cast<int>(r);
        if (modes.ions[r] == spec.ion_j) rj = static_cast<int>(r);
    }
    if (ri < 0 || rj < 0) throw ConfigError("gate ion is not a free ion of the spectrum");
    return {ri, rj};
}

Eigen::VectorXd thermal_weights(const ModeSpectrum& modes, double temperature) {
    Eigen::VectorXd beta(modes.size());
    for (int k = 0; k < modes.size(); ++k)
        beta[k] = temperature > 0.0 ? 1.0 / std::tanh(modes.omega[k] / temperature) : 1.0;
    return beta;
}

}  // namespace

void validate(const GateSpec& s) {
    if (s.ion_i == s.ion_j) throw ConfigError("gate ions must differ");
    if (!(s.t_g > 0.0)) throw ConfigError("gate time must be positive");
    if (s.segments < 1) throw ConfigError("segment count must be at least 1");
    if (!(s.delta_k > 0.0)) throw ConfigError("delta_k must be positive");
    if (!(s.eps > 0.0)) throw ConfigError("eps must be positive");
    if (s.axis == Axis::z) throw ConfigError("gate axis must be transverse (x or y)");
    if (s.temperature < 0.0) throw ConfigError("temperature must be non-negative");
}

Eigen::VectorXd lamb_dicke(const ModeSpectrum& modes, const GateSpec& spec) {
    return (spec.delta_k * (spec.eps / modes.omega.array()).sqrt()).matrix();
}

cd segment_drive_integral(double t0, double t1, double mu, double w) {
    const double width = t1 - t0;
    cd sum = 0.0;
    for (int sg : {1, -1}) {
        const cd a(0.0, w + sg * mu);
        sum += double(sg) / cd(0.0, 2.0) * width * std::exp(a * t0) * exp_dd2(0.0, a * width);
    }
    return sum;
}

double segment_phase_integral(double t0, double t1, double mu, double w) {
    const double width = t1 - t0;
    const cd i2cubed = std::pow(cd(0.0, 2.0), 3);
    cd sum = 0.0;
    for (int s1 : {1, -1})
        for (int s2 : {1, -1})
            for (int r : {1, -1}) {
                const cd p(0.0, s1 * mu + r * w);
                const cd q(0.0, s2 * mu - r * w);
                sum += double(s1 * s2 * r) / i2cubed * std::exp((p + q) * t0) * width * width *
                       exp_dd3(0.0, p * width, (p + q) * width);
            }
    return sum.real();
}

Displacements displacement_alpha(const PulseShape& pulse, const GateSpec& spec, const ModeSpectrum& modes) {
    validate(spec);
    if (pulse.omega.size() != spec.segments) throw ConfigError("pulse segment count mismatch");
    const auto [ri, rj] = target_rows(spec, modes);
    const SegmentTables t = segment_tables(spec, modes, pulse.mu, false);
    const Eigen::VectorXd eta = lamb_dicke(modes, spec);
    const Eigen::VectorXcd drive = t.drive.transpose() * pulse.omega.cast<cd>();
    Displacements d;
    d.alpha_i = (eta.cwiseProduct(modes.g.row(ri).transpose())).cast<cd>().cwiseProduct(drive);
    d.alpha_j = (eta.cwiseProduct(modes.g.row(rj).transpose())).cast<cd>().cwiseProduct(drive);
    return d;
}

GateKernels gate_kernels(const GateSpec& spec, const ModeSpectrum& modes, double mu) {
    validate(spec);
    const auto [ri, rj] = target_rows(spec, modes);
    const SegmentTables t = segment_tables(spec, modes, mu, true);
    const Eigen::VectorXd eta2 = lamb_dicke(modes, spec).array().square();
    const Eigen::VectorXd gi = modes.g.row(ri).transpose();
    const Eigen::VectorXd gj = modes.g.row(rj).transpose();
    const Eigen::VectorXd coupling = eta2.cwiseProduct(gi).cwiseProduct(gj);
    const Eigen::VectorXd beta = thermal_weights(modes, spec.temperature);
    const Eigen::VectorXd weight =
        beta.cwiseProduct(eta2).cwiseProduct(gi.cwiseAbs2() + gj.cwiseAbs2());

    const int m = spec.segments;
    GateKernels k;
    k.phase.resize(m, m);
    for (int a = 0; a < m; ++a) {
        k.phase(a, a) = 2.0 * t.phase.row(a).dot(coupling);
        for (int b = a + 1; b < m; ++b) {
            const Eigen::VectorXd im =
                (t.drive.row(b).array() * t.drive.row(a).array().conjugate()).imag();
            k.phase(a, b) = k.phase(b, a) = im.dot(coupling);
        }
    }
    const Eigen::MatrixXcd wd = t.drive * weight.cast<cd>().asDiagonal();
    k.residual = (wd * t.drive.adjoint()).real();
    k.residual = 0.5 * (k.residual + k.residual.transpose()).eval();
    return k;
}

double accumulated_phase(const PulseShape& pulse, const GateSpec& spec, const ModeSpectrum& modes) {
    if (pulse.omega.size() != spec.segments) throw ConfigError("pulse segment count mismatch");
    const GateKernels k = gate_kernels(spec, modes, pulse.mu);
    return pulse.omega.dot(k.phase * pulse.omega);
}

double computational_infidelity(const Eigen::VectorXcd& ai, const Eigen::VectorXcd& aj,
                                const ModeSpectrum& modes, double temperature) {
    if (ai.size() != modes.size() || aj.size() != modes.size())
        throw ConfigError("displacement vectors do not match the spectrum");
    const Eigen::VectorXd beta = thermal_weights(modes, temperature);
    // 1 - Gamma for each displacement, via expm1 to keep precision for tiny errors.
    auto one_minus_gamma = [&](const Eigen::VectorXcd& a) {
        return -std::expm1(-0.5 * a.cwiseAbs2().dot(beta));
    };
    const double v = (2.0 * one_minus_gamma(ai) + 2.0 * one_minus_gamma(aj) + one_minus_gamma(ai + aj) +
                      one_minus_gamma(ai - aj)) /
                     8.0;
    return std::max(0.0, v);
}

double eta_omega_max(const PulseShape& pulse, const GateSpec& spec, const ModeSpectrum& modes) {
    const double eta = spec.delta_k * std::sqrt(spec.eps / modes.omega.mean());
    return eta * pulse.omega.cwiseAbs().maxCoeff();
}

GateErrorBudget evaluate_pulse(const PulseShape& pulse, const GateSpec& spec, const ModeSpectrum& modes) {
    const Displacements d = displacement_alpha(pulse, spec, modes);
    GateErrorBudget b;
    b.dF_c = computational_infidelity(d.alpha_i, d.alpha_j, modes, spec.temperature);
    b.eta_omega_max = eta_omega_max(pulse, spec, modes);
    return b;
}

GateDesign optimize_pulse(const GateSpec& spec, const ModeSpectrum& modes) {
    validate(spec);
    double lo = spec.mu_min, hi = spec.mu_max;
    if (!(hi > lo)) {
        lo = modes.omega.minCoeff();
        hi = modes.omega.maxCoeff();
    }
    if (spec.mu_points < 1) throw ConfigError("empty mu grid");
    const int m = spec.segments;

    GateDesign best;
    best.budget.dF_c = std::numeric_limits<double>::infinity();
    for (int p = 0; p < spec.mu_points; ++p) {
        const double mu = spec.mu_points == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * p / (spec.mu_points - 1);
        GateKernels k = gate_kernels(spec, modes, mu);
        k.residual.diagonal().array() += 1e-13 * k.residual.trace() + 1e-300;
        Eigen::LLT<Eigen::MatrixXd> llt(k.residual);
        if (llt.info() != Eigen::Success) continue;
        const Eigen::MatrixXd lmat = llt.matrixL();
        const Eigen::MatrixXd linv = lmat.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(m, m));
        const Eigen::MatrixXd c = linv * k.phase * linv.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c + c.transpose()));
        Eigen::Index kmax;
        es.eigenvalues().cwiseAbs().maxCoeff(&kmax);
        if (es.eigenvalues()[kmax] == 0.0) continue;
        PulseShape pulse;
        pulse.mu = mu;
        pulse.omega = linv.transpose() * es.eigenvectors().col(kmax);
        const double phi = pulse.omega.dot(k.phase * pulse.omega);
        if (phi == 0.0 || !std::isfinite(phi)) continue;
        pulse.omega *= std::sqrt(constants::pi / 4.0 / std::abs(phi));
        Eigen::Index imax;
        pulse.omega.cwiseAbs().maxCoeff(&imax);
        if (pulse.omega[imax] < 0.0) pulse.omega = -pulse.omega;
        pulse.phi = phi > 0.0 ? constants::pi / 4.0 : -constants::pi / 4.0;

        const GateErrorBudget b = evaluate_pulse(pulse, spec, modes);
        if (b.dF_c < best.budget.dF_c) {
            best.pulse = pulse;
            best.budget = b;
        }
    }
    if (!std::isfinite(best.budget.dF_c)) throw NumericError("no feasible gate on the mu grid");
    best.pulse.phi = accumulated_phase(best.pulse, spec, modes);
    return best;
}

PowerScaling power_scaling(const GateSpec& spec, const std::vector<double>& t_g, const ModeSpectrum& modes) {
    if (t_g.size() < 4) throw ConfigError("power scaling needs at least 4 gate times");
    const auto [mn, mx] = std::minmax_element(t_g.begin(), t_g.end());
    if (*mx < 10.0 * *mn) throw ConfigError("gate times must span at least one decade");
    PowerScaling out;
    std::vector<double> y;
    for (double t : t_g) {
        GateSpec s = spec;
        s.t_g = t;
        out.t_g.push_back(t);
        out.designs.push_back(optimize_pulse(s, modes));
        y.push_back(out.designs.back().budget.eta_omega_max);
    }
    out.fit = fit_power_law(out.t_g, y);
    return out;
}

double lamb_dicke_infidelity(double eta, double nbar) {
    const double e2 = eta * eta;
    return constants::pi * constants::pi * e2 * e2 * (nbar * nbar + nbar + 0.125);
}

double lamb_dicke_infidelity_from_fluctuation(double delta_k, double dx) {
    const double q = delta_k * dx;
    return constants::pi * constants::pi * q * q * q * q;
}

double anharmonic_infidelity(double dx) { return dx * dx; }

double beam_profile_infidelity(double dz, double waist) {
    if (!(waist > 0.0)) throw ConfigError("beam waist must be positive");
    const double r = dz / waist;
    return constants::pi * constants::pi / 4.0 * r * r * r * r;
}

ThermalErrors thermal_errors(const ModeSpectrum& modes, double temperature, double delta_k, double waist,
                             double eps, std::optional<double> mu, PhononAverage average) {
    if (!(waist > 0.0)) throw ConfigError("beam waist must be positive");
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    const CovarianceState sigma = thermal_covariance(modes, temperature, eps);
    const Eigen::VectorXd pf = position_fluctuations(sigma);
    ThermalErrors e;
    e.dx_th = std::sqrt(pf.cwiseAbs2().mean());
    e.dF_a = anharmonic_infidelity(e.dx_th);

    auto nbar = [&](double w) { return 1.0 / std::expm1(w / temperature); };
    if (modes.axis == Axis::z) {
        e.dF_b = beam_profile_infidelity(e.dx_th, waist);
        return e;
    }
    double w_ref;
    if (mu && average == PhononAverage::nearest_mu) {
        Eigen::Index k;
        (modes.omega.array() - *mu).abs().minCoeff(&k);
        w_ref = modes.omega[k];
        e.nbar = nbar(w_ref);
    } else {
        w_ref = modes.omega.mean();
        double s = 0.0;
        for (int k = 0; k < modes.size(); ++k) s += nbar(modes.omega[k]);
        e.nbar = s / modes.size();
    }
    const double eta = delta_k * std::sqrt(eps / w_ref);
    e.dF_LD = lamb_dicke_infidelity(eta, e.nbar);
    return e;
}

}  // namespace ionchain
