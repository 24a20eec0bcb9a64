#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ionchain/physmodel.hpp"

namespace ionchain {

struct BookendValue {
    double u = 0.0;    // energy in m omega0^2 d0^2
    double du = 0.0;   // dU/dz
    double d2u = 0.0;  // d2U/dz2, i.e. nu_z^2
};

// Bookend potential of the electrode pair at z (units of d0).
BookendValue bookend_potential(double z, const DimensionlessTrap& trap);

struct Crystal {
    Eigen::VectorXd u;  // ascending positions, units of d0
    double grad_norm = 0.0;
    int iterations = 0;
    TrapConfig config;
    TweezerLayout tweezers;

    int size() const { return static_cast<int>(u.size()); }
};

struct SolverOptions {
    double tolerance = 1e-10;
    int max_iterations = 500;
    double min_spacing = 0.01;
};

// Total energy: bookend terms plus pairwise Coulomb 1/|u_i - u_j|.
double total_energy(const Eigen::VectorXd& u, const DimensionlessTrap& trap);
Eigen::VectorXd energy_gradient(const Eigen::VectorXd& u, const DimensionlessTrap& trap);
// Equal to the longitudinal coupling matrix without tweezers.
Eigen::MatrixXd energy_hessian(const Eigen::VectorXd& u, const DimensionlessTrap& trap);

// Tweezers are carried along for downstream modules; they exert no static force.
Crystal solve_equilibrium(const TrapConfig& config, const TweezerLayout& tweezers = {},
                          const std::optional<Eigen::VectorXd>& initial_guess = std::nullopt,
                          const SolverOptions& options = {});

struct SpacingStats {
    double mean_spacing = 0.0;
    double sigma_d = 0.0;
    double middle_fraction = 0.8;
    int first_ion = 0;  // first retained ion
    int last_ion = 0;   // last retained ion
    std::vector<std::pair<double, int>> histogram;  // bin centre, count

    double relative_sigma() const { return sigma_d / mean_spacing; }
};

SpacingStats spacing_stats(const Eigen::VectorXd& u, double middle_fraction = 0.8, int bins = 40);
inline SpacingStats spacing_stats(const Crystal& c, double middle_fraction = 0.8, int bins = 40) {
    return spacing_stats(c.u, middle_fraction, bins);
}

// Number of ions whose middle-80% mean spacing is closest to d0 for bookend separation L (d0 units).
int calibrate_count(double length_d0, const TrapConfig& config);

// Bookend separation (d0 units) giving a middle-80% mean spacing of exactly d0 for n ions.
double calibrate_length(int n_ions, const TrapConfig& config, double rel_tol = 1e-9);

}  // namespace ionchain
