#pragma once

#include <span>
#include <string>
#include <vector>

#include "seqctl/model.hpp"

namespace seqctl {

/// Loss structure of the Lagrangian: error multipliers lambda_ij and
/// per-hypothesis sampling cost weights c_i (default (1, 0, ..., 0)).
struct LossSpec {
    std::vector<std::vector<double>> lambda; // k x k, zero diagonal
    std::vector<double> cost_weights;

    int k() const { return static_cast<int>(lambda.size()); }
    void validate() const; // throws ConfigError

    static LossSpec uniform(int k, double multiplier,
                            std::vector<double> cost_weights = {});
};

struct BayesSpec {
    std::vector<double> priors;              // positive, sums to 1
    std::vector<std::vector<double>> losses; // w_ij >= 0, zero diagonal
    double cost = 1.0;                       // per-observation cost, > 0

    int k() const { return static_cast<int>(priors.size()); }
    void validate() const;
};

/// g(z) = min_j sum_{i != j} lambda_ij z_i with z_1 = 1; z = (z_2..z_k).
double terminal_cost_g(const LossSpec& spec, std::span<const double> z);
double terminal_cost_g(const LossSpec& spec, const LikelihoodState& state);

/// Smallest hypothesis index attaining the minimum in terminal_cost_g (1-based).
int accept_decision(const LossSpec& spec, std::span<const double> z);
int accept_decision(const LossSpec& spec, const LikelihoodState& state);

/// sum_i c_i z_i with z_1 = 1; equals 1 for the default cost weights.
double stage_cost(const LossSpec& spec, std::span<const double> z);
double stage_cost(const LossSpec& spec, const LikelihoodState& state);

/// lambda_ij = pi_i w_ij, c_i = c pi_i: the Lagrange machinery then computes
/// the Bayes solution and the Lagrangian value equals the Bayes risk.
LossSpec bayes_to_lagrange(const BayesSpec& bayes);

/// Canonical text form used for fingerprinting.
std::string canonical_text(const LossSpec& spec);

} // namespace seqctl
