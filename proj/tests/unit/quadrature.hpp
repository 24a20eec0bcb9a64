#pragma once

#include <cmath>
#include <complex>
#include <vector>

// Composite Gauss-Legendre quadrature used as an independent oracle.
namespace quad {

struct Rule {
    std::vector<double> x, w;
};

inline Rule legendre(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
                break;
            }
        }
        r.x[i] = x;
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

template <class F>
auto integrate(F f, double a, double b, int panels = 64, int order = 20) {
    static const Rule rule = legendre(20);
    using T = decltype(f(a));
    T sum = T(0);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        for (int i = 0; i < order; ++i) sum += rule.w[i] * 0.5 * h * f(lo + 0.5 * h * (rule.x[i] + 1.0));
    }
    return sum;
}

}  // namespace quad
