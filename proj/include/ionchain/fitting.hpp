#pragma once

#include <vector>

namespace ionchain {

// y = prefactor * x^exponent, fitted by least squares in log-log space.
struct PowerLawFit {
    double prefactor = 0.0;
    double exponent = 0.0;
    double r_squared = 0.0;
    int points = 0;

    double operator()(double x) const;
};

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ionchain
