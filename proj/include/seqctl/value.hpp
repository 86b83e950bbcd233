#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqctl/criteria.hpp"
#include "seqctl/model.hpp"

namespace seqctl {

struct GridAxis {
    double lo = -25.0;
    double hi = 25.0;
    int m = 1001;
    std::vector<double> extra; // additional log-z coordinates to include
};

struct GridSpec {
    std::vector<GridAxis> axes; // one per dimension, k-1 total

    static GridSpec default_for(int k); // throws ConfigError for k < 2 or k > 4
    std::vector<std::vector<double>> build_axes() const;
};

/// rho estimates over a rectilinear grid in log likelihood-ratio space.
struct ValueTable {
    GridSpec grid;
    std::vector<std::vector<double>> axes; // realized sorted coordinates per dim
    std::vector<double> values;            // row-major over the axes
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
    std::string fingerprint;

    // derived lookup metadata, set by finalize_axes()
    std::vector<unsigned char> axis_uniform;
    std::vector<double> axis_step;
    std::vector<std::size_t> strides;

    int dims() const { return static_cast<int>(axes.size()); }
    std::size_t node_count() const { return values.size(); }
};

/// Recomputes the lookup metadata after axes/values changes or a load.
void finalize_axes(ValueTable& table);

/// Reads a table with the off-grid extension: queries beyond the bounds
/// evaluate the terminal cost g (stopping is optimal at extreme ratios).
class RhoView {
public:
    RhoView(const ValueTable& table, const LossSpec& spec)
        : table_(&table), spec_(&spec) {}
    double operator()(std::span<const double> log_z) const;

private:
    const ValueTable* table_;
    const LossSpec* spec_;
};

struct SolveOptions {
    double tol = 1e-6;
    int max_iter = 1000;
};

ValueTable make_terminal_table(const ControlledModel& model, const LossSpec& spec,
                               const GridSpec& grid);

/// One Bellman sweep: v'(p) = min{g(z_p), stage(z_p) + min_x E_1[v(z_p * inc)]}.
ValueTable bellman_apply(const ControlledModel& model, const LossSpec& spec,
                         const ValueTable& table);

/// r Bellman sweeps from the terminal table (the r-stage truncated value).
ValueTable truncated_rho(const ControlledModel& model, const LossSpec& spec,
                         const GridSpec& grid, int r);

/// Monotone value iteration from g to the fixed point rho = min{g, stage + R}.
ValueTable solve_rho(const ControlledModel& model, const LossSpec& spec,
                     const GridSpec& grid, const SolveOptions& opts = {});

struct Continuation {
    double value = 0.0; // R(z): minimized expected next-stage value
    int control = 0;    // smallest index attaining it (1e-9 co-optimal band)
};

Continuation continuation(const ControlledModel& model, const LossSpec& spec,
                          const ValueTable& table, std::span<const double> log_z);
Continuation continuation(const ControlledModel& model, const LossSpec& spec,
                          const ValueTable& table, const LikelihoodState& state);

/// R at the all-ones state; stage_cost(1) + r0 is the optimal Lagrangian among
/// procedures taking at least one observation.
double r0(const ControlledModel& model, const LossSpec& spec, const ValueTable& table);

/// True when deciding with zero observations is at least as good: l_0 <= stage + R.
bool trivial_procedure_optimal(const ControlledModel& model, const LossSpec& spec,
                               const ValueTable& table);

std::string make_fingerprint(const ControlledModel& model, const LossSpec& spec);

} // namespace seqctl
