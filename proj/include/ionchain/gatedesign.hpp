#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ionchain/fitting.hpp"
#include "ionchain/modespec.hpp"
#include "ionchain/physmodel.hpp"

namespace ionchain {

// All quantities dimensionless: times in 1/omega0, frequencies in omega0.
struct GateSpec {
    int ion_i = 0;  // crystal indices of the gate pair
    int ion_j = 1;
    double t_g = 1.0;
    int segments = 7;
    Axis axis = Axis::x;
    double delta_k = 0.0;  // |Dk| d0
    double eps = 0.0;      // hbar / (m omega0 d0^2)
    double temperature = 0.0;
    double mu_min = 0.0;  // mu_min >= mu_max selects the band of the modes
    double mu_max = 0.0;
    int mu_points = 2000;
};

void validate(const GateSpec& spec);

struct PulseShape {
    Eigen::VectorXd omega;  // segment Rabi amplitudes
    double mu = 0.0;
    double phi = 0.0;
};

struct GateErrorBudget {
    double dF_c = 0.0;
    double dF_LD = 0.0;
    double dF_a = 0.0;
    double dF_b = 0.0;
    double eta_omega_max = 0.0;
};

struct GateDesign {
    PulseShape pulse;
    GateErrorBudget budget;  // thermal channels left at zero; see thermal_errors
};

struct Displacements {
    Eigen::VectorXcd alpha_i;
    Eigen::VectorXcd alpha_j;
};

// Lamb-Dicke parameter of every mode.
Eigen::VectorXd lamb_dicke(const ModeSpectrum& modes, const GateSpec& spec);

// Integral of sin(mu t) exp(i w t) over [t0, t1].
std::complex<double> segment_drive_integral(double t0, double t1, double mu, double w);

// Ordered double integral over t0 <= t <= t' <= t1 of sin(mu t') sin(mu t) sin(w (t' - t)).
double segment_phase_integral(double t0, double t1, double mu, double w);

Displacements displacement_alpha(const PulseShape& pulse, const GateSpec& spec, const ModeSpectrum& modes);
double accumulated_phase(const PulseShape& pulse, const GateSpec& spec, const ModeSpectrum& modes);

// Quadratic forms in the segment amplitudes at beat note mu.
struct GateKernels {
    Eigen::MatrixXd phase;     // phi = Omega^T phase Omega
    Eigen::MatrixXd residual;  // sum_k beta_k (|a_ik|^2 + |a_jk|^2) = Omega^T residual Omega
};
GateKernels gate_kernels(const GateSpec& spec, const ModeSpectrum& modes, double mu);

double computational_infidelity(const Eigen::VectorXcd& alpha_i, const Eigen::VectorXcd& alpha_j,
                                const ModeSpectrum& modes, double temperature);

// eta at the mean frequency of the band times the largest segment amplitude.
double eta_omega_max(const PulseShape& pulse, const GateSpec& spec, const ModeSpectrum& modes);

// Segment amplitudes minimizing the thermal residual at |phi| = pi/4, best over the mu grid.
GateDesign optimize_pulse(const GateSpec& spec, const ModeSpectrum& modes);

// Same pulse evaluated on another spectrum (for example the full crystal).
GateErrorBudget evaluate_pulse(const PulseShape& pulse, const GateSpec& spec, const ModeSpectrum& modes);

struct PowerScaling {
    std::vector<double> t_g;
    std::vector<GateDesign> designs;
    PowerLawFit fit;  // eta_omega_max vs t_g
};

PowerScaling power_scaling(const GateSpec& spec, const std::vector<double>& t_g, const ModeSpectrum& modes);

double lamb_dicke_infidelity(double eta, double nbar);
// Large-occupation form pi^2 (|Dk| d0)^4 dx^4 with dx in d0 units.
double lamb_dicke_infidelity_from_fluctuation(double delta_k, double dx);
double anharmonic_infidelity(double dx);
double beam_profile_infidelity(double dz, double waist);

enum class PhononAverage { nearest_mu, band_average };

struct ThermalErrors {
    double dF_LD = 0.0;
    double dF_a = 0.0;
    double dF_b = 0.0;
    double dx_th = 0.0;  // RMS thermal PF over ions, d0 units
    double nbar = 0.0;
};

// Transverse axes get dF_LD and dF_a; the longitudinal axis gets dF_a and dF_b.
ThermalErrors thermal_errors(const ModeSpectrum& modes, double temperature, double delta_k, double waist,
                             double eps, std::optional<double> mu = std::nullopt,
                             PhononAverage average = PhononAverage::nearest_mu);

}  // namespace ionchain
