// Operating characteristics: exact forward recursion over likelihood states
// for discrete models, Monte Carlo with deterministic substreams otherwise,
// the literal truncated-induction oracle, and the dominance scan.

#include "seqctl/evaluate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <unordered_map>

#include "seqctl/errors.hpp"
#include "seqctl/rng.hpp"

namespace seqctl {

namespace {

constexpr double kQuantum = 1e-12; // state-merge position quantum in log z

using Key = std::array<std::int64_t, 3>;

struct KeyHash {
    std::size_t operator()(const Key& k) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (std::int64_t v : k) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

Key key_of(const std::array<double, 3>& log_z, int dims) {
    Key key{0, 0, 0};
    for (int d = 0; d < dims; ++d) {
        const double q = log_z[static_cast<std::size_t>(d)];
        key[static_cast<std::size_t>(d)] =
            std::isfinite(q) ? static_cast<std::int64_t>(std::llround(q / kQuantum))
                             : std::numeric_limits<std::int64_t>::min();
    }
    return key;
}

struct ForwardState {
    std::array<double, 3> log_z{};
    std::vector<double> mass; // per hypothesis
};

void finish_report(EvalReport& report, const LossSpec& spec) {
    const int k = report.k;
    report.beta.assign(static_cast<std::size_t>(k), 0.0);
    double lagr = 0.0;
    for (int i = 0; i < k; ++i) {
        lagr += spec.cost_weights[static_cast<std::size_t>(i)] * report.asn[static_cast<std::size_t>(i)];
        for (int j = 0; j < k; ++j) {
            if (i != j) {
                report.beta[static_cast<std::size_t>(i)] += report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                lagr += spec.lambda[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                        report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
        }
    }
    report.lagrangian = lagr;
}

} // namespace

DecisionRule to_rule(const Policy& policy) {
    DecisionRule rule;
    const Policy* p = &policy;
    rule.stop = [p](const LikelihoodState& st) { return natural_stop(*p, st); };
    rule.control = [p](const LikelihoodState& st) {
        return st.n == 0 ? p->initial_control : next_control(*p, st);
    };
    rule.decide = [p](const LikelihoodState& st) { return decide(*p, st); };
    rule.horizon_cap = policy.horizon_cap;
    return rule;
}

EvalReport exact_eval(const ControlledModel& model, const LossSpec& spec,
                      const DecisionRule& rule, const ExactOptions& opts) {
    if (!model.discrete())
        throw ConfigError("exact_eval: only discrete models enumerate exactly; use mc_eval");
    spec.validate();
    const int k = model.k();
    const int dims = k - 1;
    const auto& d = model.discrete_observation();

    EvalReport report;
    report.k = k;
    report.method = "exact";
    report.alpha.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
    report.asn.assign(static_cast<std::size_t>(k), 0.0);
    report.truncation_mass.assign(static_cast<std::size_t>(k), 0.0);

    std::map<Key, ForwardState> cur;
    {
        ForwardState init;
        init.mass.assign(static_cast<std::size_t>(k), 1.0);
        cur.emplace(key_of(init.log_z, dims), std::move(init));
    }
    LikelihoodState probe = LikelihoodState::initial(k);
    long expansions = 0;

    for (long n = 0; !cur.empty(); ++n) {
        std::map<Key, ForwardState> next;
        for (auto& [key, st] : cur) {
            probe.n = n;
            probe.log_z.assign(st.log_z.begin(), st.log_z.begin() + dims);

            double top = 0.0;
            for (double m : st.mass) top = std::max(top, m);
            if (top < opts.mass_floor) {
                for (int i = 0; i < k; ++i) {
                    report.truncation_mass[static_cast<std::size_t>(i)] += st.mass[static_cast<std::size_t>(i)];
                    report.asn[static_cast<std::size_t>(i)] += static_cast<double>(n) * st.mass[static_cast<std::size_t>(i)];
                }
                continue;
            }
            if (n > 0 && rule.stop(probe)) {
                const int j = rule.decide(probe);
                for (int i = 0; i < k; ++i) {
                    report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)] += st.mass[static_cast<std::size_t>(i)];
                    report.asn[static_cast<std::size_t>(i)] += static_cast<double>(n) * st.mass[static_cast<std::size_t>(i)];
                }
                continue;
            }
            if (n >= rule.horizon_cap) { // forced stop, no decision recorded
                for (int i = 0; i < k; ++i) {
                    report.truncation_mass[static_cast<std::size_t>(i)] += st.mass[static_cast<std::size_t>(i)];
                    report.asn[static_cast<std::size_t>(i)] += static_cast<double>(n) * st.mass[static_cast<std::size_t>(i)];
                }
                continue;
            }
            if (++expansions > opts.budget)
                throw BudgetError("exact_eval: state budget exceeded; consider mc_eval");
            const int x = rule.control(probe);
            const H1Kernel& kern = model.h1_kernel(x);
            for (std::size_t e = 0; e < kern.weight.size(); ++e) {
                std::array<double, 3> lz = st.log_z;
                for (int dd = 0; dd < dims; ++dd)
                    lz[static_cast<std::size_t>(dd)] += kern.log_inc[e][static_cast<std::size_t>(dd)];
                const int y = kern.outcome_index[e];
                auto [it, inserted] = next.try_emplace(key_of(lz, dims));
                ForwardState& child = it->second;
                if (inserted) {
                    child.log_z = lz;
                    child.mass.assign(static_cast<std::size_t>(k), 0.0);
                }
                for (int i = 0; i < k; ++i)
                    child.mass[static_cast<std::size_t>(i)] += st.mass[static_cast<std::size_t>(i)] * d.pmf[i][x][y];
            }
        }
        cur.swap(next);
    }
    finish_report(report, spec);
    return report;
}

EvalReport mc_eval(const ControlledModel& model, const LossSpec& spec,
                   const DecisionRule& rule, long reps, std::uint64_t seed) {
    if (reps < 1) throw ConfigError("mc_eval: need reps >= 1");
    if (!model.can_sample()) throw ConfigError("mc_eval: model provides no sampler");
    spec.validate();
    const int k = model.k();
    const bool discrete = model.discrete();

    EvalReport report;
    report.k = k;
    report.method = "monte_carlo";
    report.alpha.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
    report.asn.assign(static_cast<std::size_t>(k), 0.0);
    report.truncation_mass.assign(static_cast<std::size_t>(k), 0.0);
    MonteCarloStats stats;
    stats.reps = reps;
    stats.seed = seed;
    stats.alpha_se.assign(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
    stats.asn_se.assign(static_cast<std::size_t>(k), 0.0);

    std::vector<long> steps(static_cast<std::size_t>(reps));
    std::vector<int> decisions(static_cast<std::size_t>(reps));
    for (int i = 1; i <= k; ++i) {
        for (long rep = 0; rep < reps; ++rep) {
            auto engine = substream_engine(seed, static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(rep));
            LikelihoodState st = LikelihoodState::initial(k);
            int dec = 0; // 0 = truncated
            while (true) {
                if (st.n >= 1 && rule.stop(st)) {
                    dec = rule.decide(st);
                    break;
                }
                if (st.n >= rule.horizon_cap) break;
                const int x = rule.control(st);
                const double y = model.sample(i, x, engine);
                st = advance(model, st, x,
                             discrete ? Outcome{static_cast<int>(y)} : Outcome{y});
            }
            steps[static_cast<std::size_t>(rep)] = st.n;
            decisions[static_cast<std::size_t>(rep)] = dec;
        }
        // fixed-order reduction, independent of any parallel execution
        double mean_n = 0.0;
        for (long rep = 0; rep < reps; ++rep) {
            mean_n += static_cast<double>(steps[static_cast<std::size_t>(rep)]);
            const int dec = decisions[static_cast<std::size_t>(rep)];
            if (dec == 0)
                report.truncation_mass[static_cast<std::size_t>(i - 1)] += 1.0;
            else
                report.alpha[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(dec - 1)] += 1.0;
        }
        mean_n /= static_cast<double>(reps);
        double var_n = 0.0;
        for (long rep = 0; rep < reps; ++rep) {
            const double dev = static_cast<double>(steps[static_cast<std::size_t>(rep)]) - mean_n;
            var_n += dev * dev;
        }
        var_n /= std::max<double>(1.0, static_cast<double>(reps - 1));
        report.asn[static_cast<std::size_t>(i - 1)] = mean_n;
        stats.asn_se[static_cast<std::size_t>(i - 1)] = std::sqrt(var_n / static_cast<double>(reps));
        for (int j = 0; j < k; ++j) {
            double& a = report.alpha[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
            a /= static_cast<double>(reps);
            stats.alpha_se[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)] =
                std::sqrt(std::max(0.0, a * (1.0 - a)) / static_cast<double>(reps));
        }
        report.truncation_mass[static_cast<std::size_t>(i - 1)] /= static_cast<double>(reps);
    }
    report.mc = std::move(stats);
    finish_report(report, spec);
    return report;
}

double bayes_risk(const EvalReport& report, const BayesSpec& bayes) {
    bayes.validate();
    const int k = report.k;
    double risk = 0.0;
    for (int i = 0; i < k; ++i) {
        double inner = bayes.cost * report.asn[static_cast<std::size_t>(i)];
        for (int j = 0; j < k; ++j)
            inner += bayes.losses[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                     report.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        risk += bayes.priors[static_cast<std::size_t>(i)] * inner;
    }
    return risk;
}

namespace {

struct OracleRecorder {
    const ControlledModel* model;
    const LossSpec* spec;
    int horizon;
    long budget;
    long visited = 0;
    std::vector<OracleEntry> entries;

    double visit(int n, std::vector<double>& f) {
        const int k = model->k();
        if (++visited > budget) throw BudgetError("dp_oracle: path budget exceeded");
        double l = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            double s = 0.0;
            for (int i = 0; i < k; ++i)
                if (i != j) s += spec->lambda[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * f[static_cast<std::size_t>(i)];
            l = std::min(l, s);
        }
        double value;
        if (n == horizon) {
            value = l;
        } else {
            double stage = 0.0;
            for (int i = 0; i < k; ++i)
                stage += spec->cost_weights[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
            const auto& d = model->discrete_observation();
            double bestR = std::numeric_limits<double>::infinity();
            std::vector<double> child(static_cast<std::size_t>(k));
            for (int x = 0; x < model->control_count(); ++x) {
                double sum = 0.0;
                for (int y = 0; y < static_cast<int>(d.outcomes.size()); ++y) {
                    bool all_zero = true;
                    for (int i = 0; i < k; ++i) {
                        child[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)] * d.pmf[i][x][y];
                        if (child[static_cast<std::size_t>(i)] > 0.0) all_zero = false;
                    }
                    if (all_zero) continue; // zero mass branch contributes nothing
                    sum += visit(n + 1, child);
                }
                bestR = std::min(bestR, sum);
            }
            value = std::min(l, stage + bestR);
        }
        if (f[0] > 0.0) {
            OracleEntry entry;
            entry.n = n;
            entry.log_z.resize(static_cast<std::size_t>(k - 1));
            for (int r = 2; r <= k; ++r)
                entry.log_z[static_cast<std::size_t>(r - 2)] =
                    std::log(f[static_cast<std::size_t>(r - 1)]) - std::log(f[0]);
            entry.value = value / f[0];
            entries.push_back(std::move(entry));
        }
        return value;
    }
};

} // namespace

std::vector<OracleEntry> dp_oracle(const ControlledModel& model, const LossSpec& spec,
                                   int horizon, long budget) {
    if (!model.discrete()) throw ConfigError("dp_oracle: discrete models only");
    if (horizon < 0) throw ConfigError("dp_oracle: need horizon >= 0");
    spec.validate();
    OracleRecorder rec{&model, &spec, horizon, budget, 0, {}};
    std::vector<double> f(static_cast<std::size_t>(model.k()), 1.0);
    rec.visit(0, f);
    return rec.entries;
}

namespace {

// Nearest-node cell id of a state, used to address single-cell perturbations.
struct CellLocator {
    const ValueTable* table;

    long cell_of(const LikelihoodState& st) const {
        long flat = 0;
        for (std::size_t d = 0; d < table->axes.size(); ++d) {
            const auto& axis = table->axes[d];
            const double q = st.log_z[d];
            long i;
            if (q <= axis.front()) {
                i = 0;
            } else if (q >= axis.back()) {
                i = static_cast<long>(axis.size()) - 1;
            } else {
                const auto it = std::upper_bound(axis.begin(), axis.end(), q);
                const long hi = static_cast<long>(it - axis.begin());
                const long lo = hi - 1;
                i = (q - axis[static_cast<std::size_t>(lo)] <=
                     axis[static_cast<std::size_t>(hi)] - q)
                        ? lo
                        : hi;
            }
            flat = flat * static_cast<long>(axis.size()) + i;
        }
        return flat;
    }
};

struct BaseDecision {
    bool stop;
    int control;
    int decide;
    long cell;
};

} // namespace

DominanceReport dominance_scan(const ControlledModel& model, const LossSpec& spec,
                               const Policy& policy, const DominanceOptions& opts) {
    if (!model.discrete())
        throw ConfigError("dominance_scan: discrete models only (exact comparisons)");

    CellLocator cells{policy.table};
    // Decisions of the base policy are shared across all family members.
    auto memo = std::make_shared<std::unordered_map<Key, BaseDecision, KeyHash>>();
    const int dims = model.k() - 1;
    auto base_decision = [&model, &policy, memo, cells, dims](const LikelihoodState& st) {
        std::array<double, 3> lz{};
        for (int d = 0; d < dims; ++d) lz[static_cast<std::size_t>(d)] = st.log_z[static_cast<std::size_t>(d)];
        const Key key = key_of(lz, dims);
        auto it = memo->find(key);
        if (it == memo->end()) {
            BaseDecision dec;
            dec.stop = natural_stop(policy, st);
            dec.control = next_control(policy, st);
            dec.decide = decide(policy, st);
            dec.cell = cells.cell_of(st);
            it = memo->emplace(key, dec).first;
        }
        return it->second;
    };

    // Plain base rule for family members; a marking variant records which
    // cells the base policy actually visits (elsewhere perturbations are
    // provably identical and need no evaluation).
    DecisionRule base_rule;
    base_rule.horizon_cap = policy.horizon_cap;
    base_rule.stop = [base_decision](const LikelihoodState& st) {
        return base_decision(st).stop;
    };
    base_rule.control = [base_decision](const LikelihoodState& st) {
        return base_decision(st).control;
    };
    base_rule.decide = [base_decision](const LikelihoodState& st) {
        return base_decision(st).decide;
    };

    auto visited = std::make_shared<std::vector<char>>(policy.table->node_count(), 0);
    auto continued = std::make_shared<std::vector<char>>(policy.table->node_count(), 0);
    DecisionRule marking_rule = base_rule;
    marking_rule.stop = [base_decision, visited](const LikelihoodState& st) {
        const BaseDecision dec = base_decision(st);
        (*visited)[static_cast<std::size_t>(dec.cell)] = 1;
        return dec.stop;
    };
    marking_rule.control = [base_decision, continued](const LikelihoodState& st) {
        const BaseDecision dec = base_decision(st);
        (*continued)[static_cast<std::size_t>(dec.cell)] = 1;
        return dec.control;
    };

    DominanceReport out;
    out.base = exact_eval(model, spec, marking_rule, opts.eval);

    const double base_weighted_asn = [&] {
        double s = 0.0;
        for (int i = 0; i < model.k(); ++i)
            s += spec.cost_weights[static_cast<std::size_t>(i)] * out.base.asn[static_cast<std::size_t>(i)];
        return s;
    }();

    auto dominates = [&](const EvalReport& candidate) {
        for (int i = 0; i < model.k(); ++i)
            for (int j = 0; j < model.k(); ++j)
                if (i != j &&
                    candidate.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >
                        out.base.alpha[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] + opts.alpha_slack)
                    return false;
        double w = 0.0;
        for (int i = 0; i < model.k(); ++i)
            w += spec.cost_weights[static_cast<std::size_t>(i)] * candidate.asn[static_cast<std::size_t>(i)];
        return w < base_weighted_asn - opts.asn_margin;
    };

    const long cell_count = static_cast<long>(policy.table->node_count());
    // Stop-region toggles: flip the stop decision inside one nearest-node cell.
    for (long c = 0; c < cell_count; ++c) {
        ++out.family_size;
        if (!(*visited)[static_cast<std::size_t>(c)]) continue; // provably identical
        DecisionRule rule = base_rule;
        rule.stop = [base_decision, c](const LikelihoodState& st) {
            const BaseDecision dec = base_decision(st);
            return dec.cell == c ? !dec.stop : dec.stop;
        };
        ++out.evaluated;
        EvalReport rep = exact_eval(model, spec, rule, opts.eval);
        if (dominates(rep))
            out.violations.push_back({"stop-toggle cell " + std::to_string(c), std::move(rep)});
    }
    // Control flips at visited continuation cells.
    for (long c = 0; c < cell_count; ++c) {
        for (int alt = 1; alt < model.control_count(); ++alt) {
            ++out.family_size;
            if (!(*continued)[static_cast<std::size_t>(c)]) continue;
            DecisionRule rule = base_rule;
            rule.control = [base_decision, c, alt, &model](const LikelihoodState& st) {
                const BaseDecision dec = base_decision(st);
                if (dec.cell != c) return dec.control;
                return (dec.control + alt) % model.control_count();
            };
            ++out.evaluated;
            EvalReport rep = exact_eval(model, spec, rule, opts.eval);
            if (dominates(rep))
                out.violations.push_back({"control-flip cell " + std::to_string(c) + " alt " +
                                              std::to_string(alt),
                                          std::move(rep)});
        }
    }
    return out;
}

} // namespace seqctl
