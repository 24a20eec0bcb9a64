#include "ionchain/fitting.hpp"

#include <cmath>

#include "ionchain/errors.hpp"

namespace ionchain {

double PowerLawFit::operator()(double x) const { return prefactor * std::pow(x, exponent); }

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ConfigError("power-law fit: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 4) throw ConfigError("power-law fit needs at least 4 points");
    double sx = 0, sy = 0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw FitError("power-law fit needs positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) throw FitError("power-law fit needs distinct x values");
    PowerLawFit f;
    f.exponent = sxy / sxx;
    f.prefactor = std::exp(my - f.exponent * mx);
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (my + f.exponent * (lx[i] - mx));
        ss_res += r * r;
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    f.points = static_cast<int>(n);
    return f;
}

}  // namespace ionchain
