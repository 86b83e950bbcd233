#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqctl/value.hpp"

namespace seqctl {

/// The extracted strategy: stop when g(z) <= stage(z) + R(z) (ties stop),
/// continue with the smallest-index control attaining R, decide by the
/// terminal rule. Forced stop at horizon_cap, reported as truncation.
struct Policy {
    const ControlledModel* model = nullptr;
    const LossSpec* spec = nullptr;
    const ValueTable* table = nullptr;
    long horizon_cap = 10000;
    int initial_control = 0;
};

Policy make_policy(const ControlledModel& model, const LossSpec& spec,
                   const ValueTable& table, long horizon_cap = 10000);

/// Stop predicate for states with n >= 1; true on ties and at the cap.
bool should_stop(const Policy& policy, const LikelihoodState& state);

/// Whether the natural criterion g <= stage + R holds, ignoring the cap.
bool natural_stop(const Policy& policy, const LikelihoodState& state);

int next_control(const Policy& policy, const LikelihoodState& state);

/// Observation update using the control the policy prescribes at this state.
LikelihoodState step(const Policy& policy, const LikelihoodState& state, const Outcome& y);

int decide(const Policy& policy, const LikelihoodState& state);

struct TerminationReport {
    long horizon_cap = 0;
    std::vector<double> mass;     // per hypothesis: P(natural rule unfired by cap)
    bool in_termination_class = false; // all masses below 1e-6
    std::string method;           // "exact" or "monte_carlo"
    long reps = 0;                // Monte Carlo only
    std::uint64_t seed = 0;
};

struct TerminationOptions {
    long reps = 100000; // Monte Carlo fallback for continuous models
    std::uint64_t seed = 1;
};

/// Per-hypothesis probability of reaching horizon_cap with the natural
/// stopping criterion never fired; exact for discrete models.
TerminationReport termination_diagnostic(const Policy& policy,
                                         const TerminationOptions& opts = {});

} // namespace seqctl
