// Gauss-Hermite nodes and weights by Newton iteration on the recurrence,
// with the usual asymptotic initial guesses.

#include "seqctl/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace seqctl {

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: need n >= 1");
    const double eps = 1.0e-14;
    const double pim4 = 0.7511255444649425; // pi^{-1/4}
    const int max_newton = 100;

    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);

    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[i - 2];
        }
        double pp = 0.0;
        for (int it = 0; it < max_newton; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= eps) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = 2.0 / (pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

QuadratureRule normal_expectation_rule(double mean, double sd, int n) {
    QuadratureRule gh = gauss_hermite(n);
    QuadratureRule rule;
    rule.nodes.reserve(n);
    rule.weights.reserve(n);
    const double root_pi = std::sqrt(std::acos(-1.0));
    const double scale = std::sqrt(2.0) * sd;
    for (int q = 0; q < n; ++q) {
        rule.nodes.push_back(mean + scale * gh.nodes[q]);
        rule.weights.push_back(gh.weights[q] / root_pi);
    }
    return rule;
}

} // namespace seqctl
