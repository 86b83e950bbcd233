// Multiplier tuning: damped multiplicative fixed point on the achieved error
// levels, with a per-multiplier adaptive damping exponent (halved when the
// error log-ratio changes sign, restored under persistent sign) so the loop
// settles on quantized achievable levels instead of limit-cycling.

#include "seqctl/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "seqctl/errors.hpp"

namespace seqctl {

namespace {

constexpr double kAchievedFloor = 1e-12;
constexpr double kFactorClamp = 4.0;
constexpr double kGammaStart = 0.8;
constexpr double kGammaFloor = 0.02;

struct FreeMultiplier {
    int i; // row (0-based); Problem II uses the whole row
    int j; // column, or -1 for a Problem II row multiplier
    double target;
    double value;
    double gamma = kGammaStart;
    double prev_sign = 0.0;
};

LossSpec spec_from(const std::vector<FreeMultiplier>& mults, int k) {
    LossSpec spec;
    spec.lambda.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
    spec.cost_weights.assign(static_cast<std::size_t>(k), 0.0);
    spec.cost_weights[0] = 1.0;
    for (const auto& m : mults) {
        if (m.j >= 0) {
            spec.lambda[static_cast<std::size_t>(m.i)][static_cast<std::size_t>(m.j)] = m.value;
        } else {
            for (int j = 0; j < k; ++j)
                if (j != m.i) spec.lambda[static_cast<std::size_t>(m.i)][static_cast<std::size_t>(j)] = m.value;
        }
    }
    return spec;
}

std::string round_key(const std::vector<FreeMultiplier>& mults) {
    std::string key;
    char buf[32];
    for (const auto& m : mults) {
        std::snprintf(buf, sizeof(buf), "%.6e;", m.value);
        key += buf;
    }
    return key;
}

void ensure_identifiable(const ControlledModel& model) {
    double max_inc = 0.0;
    for (int x = 0; x < model.control_count(); ++x) {
        const H1Kernel& kern = model.h1_kernel(x);
        for (const auto& inc : kern.log_inc)
            for (double v : inc) max_inc = std::max(max_inc, std::abs(v));
    }
    if (max_inc < 1e-12)
        throw ConfigError("calibration impossible: all hypotheses induce identical "
                          "densities under every control");
}

} // namespace

CalibrationResult calibrate(const ControlledModel& model, const CalibrationTask& task) {
    model.ensure_valid();
    ensure_identifiable(model);
    if (task.rtol <= 0.0) throw ConfigError("calibration: rtol must be positive");
    const int k = model.k();

    std::vector<FreeMultiplier> mults;
    if (const auto* p1 = std::get_if<ProblemITargets>(&task.mode)) {
        if (static_cast<int>(p1->alpha.size()) != k)
            throw ConfigError("calibration: alpha targets must be a k x k matrix");
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                if (i == j) continue;
                const double t = p1->alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (!(t > 0.0 && t < 1.0))
                    throw ConfigError("calibration: alpha targets must lie in (0,1)");
                mults.push_back({i, j, t, task.initial_multiplier});
            }
    } else {
        const auto& p2 = std::get<ProblemIITargets>(task.mode);
        if (static_cast<int>(p2.beta.size()) != k)
            throw ConfigError("calibration: beta targets must have k entries");
        for (int i = 0; i < k; ++i) {
            const double t = p2.beta[static_cast<std::size_t>(i)];
            if (!(t > 0.0 && t < 1.0))
                throw ConfigError("calibration: beta targets must lie in (0,1)");
            mults.push_back({i, -1, t, task.initial_multiplier});
        }
    }

    CalibrationResult result;
    double best_err = std::numeric_limits<double>::infinity();
    std::set<std::string> seen;
    bool cycle = false;

    for (int outer = 0; outer < task.max_outer; ++outer) {
        LossSpec spec = spec_from(mults, k);
        spec.validate();
        ValueTable table = solve_rho(model, spec, task.grid, task.solve);

        CalibrationIterate iterate;
        iterate.iteration = outer;
        for (const auto& m : mults) iterate.multipliers.push_back(m.value);

        EvalReport report;
        if (trivial_procedure_optimal(model, spec, table)) {
            // Immediate decision: alpha rows concentrate on the accepted index.
            iterate.trivial = true;
            report.k = k;
            report.method = "trivial";
            const std::vector<double> unit(static_cast<std::size_t>(k - 1), 1.0);
            const int j = accept_decision(spec, unit);
            report.alpha.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
            for (int i = 0; i < k; ++i) report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)] = 1.0;
            report.asn.assign(static_cast<std::size_t>(k), 0.0);
            report.truncation_mass.assign(static_cast<std::size_t>(k), 0.0);
            report.beta.assign(static_cast<std::size_t>(k), 0.0);
            for (int i = 0; i < k; ++i)
                for (int jj = 0; jj < k; ++jj)
                    if (i != jj) report.beta[static_cast<std::size_t>(i)] += report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(jj)];
            report.lagrangian = terminal_cost_g(spec, unit);
        } else {
            Policy policy = make_policy(model, spec, table, task.horizon_cap);
            DecisionRule rule = to_rule(policy);
            report = task.monte_carlo ? mc_eval(model, spec, rule, task.reps, task.seed)
                                      : exact_eval(model, spec, rule);
        }

        std::vector<double> achieved(mults.size());
        for (std::size_t m = 0; m < mults.size(); ++m) {
            achieved[m] = mults[m].j >= 0
                              ? report.alpha[static_cast<std::size_t>(mults[m].i)][static_cast<std::size_t>(mults[m].j)]
                              : report.beta[static_cast<std::size_t>(mults[m].i)];
        }
        iterate.achieved = achieved;
        iterate.asn = report.asn;
        result.trace.push_back(iterate);

        double err = 0.0;
        for (std::size_t m = 0; m < mults.size(); ++m)
            err = std::max(err, std::abs(achieved[m] - mults[m].target) / mults[m].target);
        if (err < best_err) {
            best_err = err;
            result.spec = spec;
            result.table = std::move(table);
            result.report = report;
        }
        if (err <= task.rtol) {
            result.converged = true;
            break;
        }
        if (!seen.insert(round_key(mults)).second) {
            cycle = true;
            result.message = "oscillation detected; returning best multipliers seen";
            break;
        }
        for (std::size_t m = 0; m < mults.size(); ++m) {
            auto& fm = mults[m];
            const double logerr = std::log(std::max(achieved[m], kAchievedFloor) / fm.target);
            const double sign = logerr > 0 ? 1.0 : (logerr < 0 ? -1.0 : 0.0);
            if (fm.prev_sign * sign < 0.0) fm.gamma = std::max(fm.gamma * 0.5, kGammaFloor);
            else if (fm.prev_sign * sign > 0.0) fm.gamma = std::min(fm.gamma * 1.4, kGammaStart);
            fm.prev_sign = sign;
            const double factor =
                std::clamp(std::exp(fm.gamma * logerr), 1.0 / kFactorClamp, kFactorClamp);
            fm.value *= factor;
        }
    }

    result.meets_constraints = true;
    if (const auto* p1 = std::get_if<ProblemITargets>(&task.mode)) {
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                if (i != j && result.report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >
                                  p1->alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
                    result.meets_constraints = false;
    } else {
        const auto& p2 = std::get<ProblemIITargets>(task.mode);
        for (int i = 0; i < k; ++i)
            if (result.report.beta[static_cast<std::size_t>(i)] > p2.beta[static_cast<std::size_t>(i)])
                result.meets_constraints = false;
    }
    if (!result.converged && !cycle)
        result.message = "iteration budget exhausted; returning best multipliers seen";
    return result;
}

std::vector<ProbePoint> error_monotonicity_probe(const ControlledModel& model,
                                                 const LossSpec& spec, int i, int j,
                                                 const std::vector<double>& factors,
                                                 const GridSpec& grid,
                                                 const SolveOptions& solve, long horizon_cap) {
    if (i < 1 || i > model.k() || j < 1 || j > model.k() || i == j)
        throw ConfigError("probe: need hypothesis indices 1 <= i != j <= k");
    std::vector<ProbePoint> out;
    for (double f : factors) {
        if (f <= 0.0) throw ConfigError("probe: factors must be positive");
        LossSpec scaled = spec;
        scaled.lambda[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] *= f;
        ValueTable table = solve_rho(model, scaled, grid, solve);
        double achieved;
        if (trivial_procedure_optimal(model, scaled, table)) {
            const std::vector<double> unit(static_cast<std::size_t>(model.k() - 1), 1.0);
            achieved = accept_decision(scaled, unit) == j ? 1.0 : 0.0;
        } else {
            Policy policy = make_policy(model, scaled, table, horizon_cap);
            EvalReport report = exact_eval(model, scaled, to_rule(policy));
            achieved = report.alpha[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
        }
        out.push_back({f, achieved});
    }
    return out;
}

} // namespace seqctl
