#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ionchain/crystal.hpp"
#include "ionchain/modespec.hpp"
#include "ionchain/physmodel.hpp"

namespace ionchain {

enum class BathRole { none, coolant, background };

// Per-ion bath parameters on one axis (dimensionless).
struct BathAssignment {
    Eigen::VectorXd gamma;
    Eigen::VectorXd temperature;      // infinity for the heating limit
    Eigen::VectorXd heating_product;  // gamma * T when temperature is infinite
    std::vector<BathRole> role;

    explicit BathAssignment(int n = 0);
    int size() const { return static_cast<int>(gamma.size()); }
    void set_coolant(int ion, double gamma, double temperature);
    // Worst-case heating: T -> infinity with gamma * T fixed.
    void set_background(int ion, double product);
};

// Every ion a coolant with the same gamma and temperature.
BathAssignment uniform_baths(int n, double gamma, double temperature);

struct CovarianceState {
    Axis axis = Axis::z;
    Eigen::MatrixXd sigma;  // 2N x 2N over (x, p)
    double time = 0.0;

    int ions() const { return static_cast<int>(sigma.rows() / 2); }
};

struct DriftDiffusion {
    Eigen::MatrixXd m;  // [[0, I], [-A, -Gamma]]
    Eigen::MatrixXd d;  // momentum block only
};

DriftDiffusion drift_diffusion(const CouplingMatrix& a, const BathAssignment& baths,
                               const ModeSpectrum& modes, double eps);

// Occupation plus one half, 0.5 coth(nu / 2T), with the T = infinity and T = 0 limits.
double thermal_occupation_half(double nu, double temperature);

CovarianceState thermal_covariance(const ModeSpectrum& modes, double temperature, double eps);

// Exact one-step discretization: transition = exp(M h), noise = int_0^h e^{Ms} D e^{M^T s} ds.
struct Propagator {
    Eigen::MatrixXd transition;
    Eigen::MatrixXd noise;
    double step = 0.0;
};

Propagator make_propagator(const Eigen::MatrixXd& m, const Eigen::MatrixXd& d, double step);

// Samples at t = 0, sample_every, ..., t_final.
std::vector<CovarianceState> evolve(const CovarianceState& sigma0, const Eigen::MatrixXd& m,
                                    const Eigen::MatrixXd& d, double t_final, double sample_every);

// Solves M S + S M^T + D = 0 by complex Schur (Bartels-Stewart).
CovarianceState steady_state(const Eigen::MatrixXd& m, const Eigen::MatrixXd& d, Axis axis = Axis::z);

Eigen::VectorXd position_fluctuations(const CovarianceState& sigma);

// Position fluctuations of a few ions without propagating the full covariance.
class FluctuationMonitor {
public:
    FluctuationMonitor(const CovarianceState& sigma0, Propagator propagator, std::vector<int> ions);

    void advance(int steps);
    const std::vector<double>& times() const { return times_; }
    // samples x monitored ions
    Eigen::MatrixXd fluctuations() const;
    const std::vector<int>& ions() const { return ions_; }

private:
    void record();

    Propagator prop_;
    std::vector<int> ions_;
    Eigen::MatrixXd sigma0_;
    Eigen::MatrixXd w_;      // (E^T)^k e_i, one column per ion
    Eigen::VectorXd noise_;  // accumulated sum_k w_k^T Q w_k
    std::vector<double> times_;
    std::vector<Eigen::VectorXd> samples_;
    double time_ = 0.0;
};

struct RelaxationFit {
    double a = 0.0;
    double tau = 0.0;
    double steady = 0.0;
    double rms_residual = 0.0;
    double span = 0.0;  // time covered by the data
};

// Fits pf(t) = a exp(-t/tau) + steady. With require_span, fewer than two e-foldings is an error.
RelaxationFit fit_relaxation(const std::vector<double>& t, const std::vector<double>& pf,
                             bool require_span = true);

struct CoolingRun {
    Axis axis = Axis::z;
    TweezerLayout tweezers;
    std::vector<int> coolants;
    double coolant_gamma = 0.01;
    double coolant_temperature = 0.0;
    double background_product = 1e-4;
    double initial_temperature = 0.0;
    double window = 1e4;       // initial simulated time
    int samples = 200;         // samples per initial window
    int primary_ion = 0;       // ion whose relaxation sets the window
    std::vector<int> monitored;
    double min_relaxations = 5.0;  // window must cover this many fitted tau
    int max_doublings = 6;
};

struct CoolingResult {
    Axis axis = Axis::z;
    std::vector<double> t;
    std::vector<int> ions;
    Eigen::MatrixXd pf;  // samples x ions
    RelaxationFit fit;   // primary ion
    bool fit_converged = false;
    std::vector<std::optional<RelaxationFit>> fits;  // per monitored ion
    Eigen::VectorXd reference_pf;  // thermal PF at the coolant temperature, same spectrum
};

CoolingResult run_cooling(const Crystal& crystal, const CoolingRun& run, double eps);

struct LocalCellSpec {
    int cell_first = 215;  // first interior ion
    int cell_last = 223;   // last interior ion
    int wall_thickness = 2;
    std::vector<int> coolants{215, 216, 222, 223};
    double tweezer_nu = 0.0;
    double coolant_gamma = 0.01;
    double coolant_temperature = 0.0;
    double background_product = 1e-4;
    double initial_temperature = 0.0;
    std::vector<Axis> axes{Axis::z, Axis::y};
    int monitor_ion = 219;
    std::vector<int> outside_ions{189, 249};
    double window = 2e4;
    int samples = 200;
};

struct LocalCellAxisReport {
    CoolingResult run;
    double interior_ratio = 0.0;  // steady interior PF / all-ion reference PF
    std::vector<double> outside_ratio;  // final outside PF / reference at that ion
    std::vector<bool> outside_monotone;  // PF non-decreasing over the run
};

struct LocalCellReport {
    std::vector<int> walls;
    std::vector<LocalCellAxisReport> axes;
};

std::vector<int> cell_walls(const LocalCellSpec& spec);

LocalCellReport local_cell_scenario(const Crystal& crystal, const LocalCellSpec& spec, double eps);

}  // namespace ionchain
