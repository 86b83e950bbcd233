#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "seqctl/evaluate.hpp"

namespace seqctl {

struct ProblemITargets {
    std::vector<std::vector<double>> alpha; // targets for i != j, in (0,1)
};

struct ProblemIITargets {
    std::vector<double> beta; // per-hypothesis gross error targets, in (0,1)
};

struct CalibrationTask {
    std::variant<ProblemITargets, ProblemIITargets> mode;
    double initial_multiplier = 10.0;
    double rtol = 0.1;
    int max_outer = 60;
    bool monte_carlo = false; // exact backend by default
    long reps = 100000;
    std::uint64_t seed = 1;
    GridSpec grid;
    SolveOptions solve;
    long horizon_cap = 10000;
};

struct CalibrationIterate {
    int iteration = 0;
    std::vector<double> multipliers; // free multipliers, row-major
    std::vector<double> achieved;
    std::vector<double> asn;
    bool trivial = false; // this iterate's optimum took no observations
};

struct CalibrationResult {
    LossSpec spec;
    ValueTable table;
    EvalReport report;
    std::vector<CalibrationIterate> trace;
    bool converged = false;
    bool meets_constraints = false; // every achieved error <= its target
    std::string message;
};

/// Tunes the multipliers until achieved errors sit within rtol of the targets.
/// Each free multiplier moves by (achieved/target)^gamma with a per-multiplier
/// adaptive gamma (halved on oscillation), clamped to a factor of 4 per step.
CalibrationResult calibrate(const ControlledModel& model, const CalibrationTask& task);

struct ProbePoint {
    double factor = 1.0;
    double achieved = 0.0;
};

/// Re-solves with lambda_ij scaled by each factor and tabulates achieved
/// alpha_ij; empirical support for the monotone update heuristic.
std::vector<ProbePoint> error_monotonicity_probe(const ControlledModel& model,
                                                 const LossSpec& spec, int i, int j,
                                                 const std::vector<double>& factors,
                                                 const GridSpec& grid,
                                                 const SolveOptions& solve = {},
                                                 long horizon_cap = 10000);

} // namespace seqctl
