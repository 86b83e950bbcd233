#pragma once

#include <vector>

namespace seqctl {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Hermite rule: integrates exp(-t^2) f(t) dt exactly for polynomials
/// of degree <= 2n-1. Physicists' convention.
QuadratureRule gauss_hermite(int n);

/// Rule for E[h(Y)] with Y ~ Normal(mean, sd^2); weights sum to 1.
QuadratureRule normal_expectation_rule(double mean, double sd, int n);

} // namespace seqctl
