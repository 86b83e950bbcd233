#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seqctl/policy.hpp"

namespace seqctl {

/// A strategy in evaluable form. stop/control/decide are functions of the
/// likelihood state only; stop is consulted for n >= 1 and the cap forces
/// termination (counted as truncation, no decision recorded).
struct DecisionRule {
    std::function<bool(const LikelihoodState&)> stop;
    std::function<int(const LikelihoodState&)> control; // 0-based control index
    std::function<int(const LikelihoodState&)> decide;  // 1-based hypothesis
    long horizon_cap = 10000;
};

DecisionRule to_rule(const Policy& policy);

struct MonteCarloStats {
    long reps = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> alpha_se;
    std::vector<double> asn_se;
};

struct EvalReport {
    int k = 0;
    std::vector<std::vector<double>> alpha; // alpha[i][j] = P_i(accept H_j)
    std::vector<double> beta;               // sum_{j != i} alpha[i][j]
    std::vector<double> asn;                // E_i[number of observations]
    std::vector<double> truncation_mass;    // forced stops, no decision
    double lagrangian = 0.0;                // sum c_i asn_i + sum lambda_ij alpha_ij
    std::optional<double> bayes_risk;
    std::string method;                     // "exact" | "monte_carlo"
    std::optional<MonteCarloStats> mc;
};

struct ExactOptions {
    long budget = 10'000'000;  // state expansions before giving up
    double mass_floor = 1e-14; // states below this go to truncation mass
};

/// Operating characteristics by forward recursion over distinct likelihood
/// states (discrete models only). States are merged on log-ratio coordinates
/// quantized at 1e-12; dropped sub-floor mass is accounted as truncation, so
/// alpha rows plus truncation sum to one at floating-point accuracy.
EvalReport exact_eval(const ControlledModel& model, const LossSpec& spec,
                      const DecisionRule& rule, const ExactOptions& opts = {});

/// Monte Carlo estimate of the same functionals with deterministic
/// per-(hypothesis, replication) substreams.
EvalReport mc_eval(const ControlledModel& model, const LossSpec& spec,
                   const DecisionRule& rule, long reps, std::uint64_t seed);

/// Bayes risk of a report under the original Bayes inputs (Eq. of definition:
/// sum_i pi_i (c asn_i + sum_j w_ij alpha_ij)).
double bayes_risk(const EvalReport& report, const BayesSpec& bayes);

struct OracleEntry {
    int n = 0;
    std::vector<double> log_z;
    double value = 0.0; // V_n^N / f_1^n at this reachable state
};

/// Literal truncated backward induction over all control/outcome paths with
/// no grid; the independent check for the value module.
std::vector<OracleEntry> dp_oracle(const ControlledModel& model, const LossSpec& spec,
                                   int horizon, long budget = 10'000'000);

struct DominanceViolation {
    std::string member;
    EvalReport report;
};

struct DominanceOptions {
    ExactOptions eval{10'000'000, 1e-12};
    double alpha_slack = 1e-12; // alpha'_ij <= alpha_ij + slack counts as "not worse"
    double asn_margin = 1e-6;   // weighted ASN must beat by this to violate
};

struct DominanceReport {
    std::size_t family_size = 0;     // all members, including skipped identical ones
    std::size_t evaluated = 0;
    std::vector<DominanceViolation> violations;
    EvalReport base;
};

/// Exhaustive check of single-cell stop-region toggles and single-cell control
/// flips against the solver policy: no member may have every alpha'_ij <=
/// alpha_ij and strictly smaller weighted ASN.
DominanceReport dominance_scan(const ControlledModel& model, const LossSpec& spec,
                               const Policy& policy, const DominanceOptions& opts = {});

} // namespace seqctl
