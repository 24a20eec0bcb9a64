#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ionchain/crystal.hpp"
#include "ionchain/fitting.hpp"
#include "ionchain/physmodel.hpp"

namespace ionchain {

// Coulomb coupling constant of each axis.
double coupling_constant(Axis axis);

struct CouplingMatrix {
    Axis axis = Axis::z;
    Eigen::MatrixXd a;  // units of omega0^2
    double c = 2.0;
};

// A_ii = base_i + sum_l c/|u_i-u_l|^3 + tweezer_nu2_i, A_ij = -c/|u_i-u_j|^3.
CouplingMatrix coupling_matrix(const Eigen::VectorXd& u, Axis axis, const Eigen::VectorXd& base_nu2,
                               const Eigen::VectorXd& tweezer_nu2);

// Uses the crystal's trap for the base confinement; tweezer terms from the layout.
CouplingMatrix coupling_matrix(const Crystal& crystal, Axis axis, const TweezerLayout& tweezers);

// Uniform unit-spacing cell of n ions embedded in an infinite frozen chain.
CouplingMatrix lattice_cell_matrix(int n, Axis axis, double base_nu2);

struct ModeSpectrum {
    Axis axis = Axis::z;
    Eigen::VectorXd omega;  // ascending, units of omega0
    Eigen::MatrixXd g;      // column k is mode k; row r is ion ions[r]
    std::vector<int> ions;  // crystal index of each row

    int size() const { return static_cast<int>(omega.size()); }
};

ModeSpectrum spectrum(const CouplingMatrix& a);

// Infinite-tweezer limit: pinned rows and columns removed.
ModeSpectrum pinned_spectrum(const CouplingMatrix& a, const std::vector<int>& pinned);
ModeSpectrum pinned_spectrum(const Crystal& crystal, Axis axis, const std::vector<int>& pinned);

// Lowest mode whose weight on the middle fraction of the crystal exceeds 1/2.
double lowest_interior_frequency(const ModeSpectrum& modes, int n_ions, double middle_fraction = 0.8);

struct ScanRow {
    int period = 0;
    double strength = 0.0;  // tweezer nu, units of omega0; infinity for the pinned limit
    double omega_lowest = 0.0;
    double omega_interior = 0.0;
};

struct TweezerScan {
    std::vector<ScanRow> rows;
    double free_lowest = 0.0;
    double free_interior = 0.0;
    std::optional<PowerLawFit> pinned_fit;  // omega_interior of the pinned limit vs period
    // Per period: the smallest scanned strength within 1% of the pinned limit (NaN if none).
    std::vector<std::pair<int, double>> convergence_strength;
};

// Periodic tweezers at index % P == P/2 - 1 for every period and strength; the pinned
// limit is added for each period when include_pinned is set.
TweezerScan tweezer_scan(const Crystal& crystal, Axis axis, const std::vector<int>& periods,
                         const std::vector<double>& strengths, bool include_pinned = true);

}  // namespace ionchain
