// The extracted strategy as executable functions of the likelihood state,
// plus the termination diagnostic for the stop-with-probability-one class.

#include "seqctl/policy.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>

#include "seqctl/errors.hpp"
#include "seqctl/rng.hpp"

namespace seqctl {

Policy make_policy(const ControlledModel& model, const LossSpec& spec,
                   const ValueTable& table, long horizon_cap) {
    if (horizon_cap < 1) throw ConfigError("policy: horizon_cap must be >= 1");
    if (table.fingerprint != make_fingerprint(model, spec))
        throw FingerprintError("policy: value table does not match model/loss");
    Policy p;
    p.model = &model;
    p.spec = &spec;
    p.table = &table;
    p.horizon_cap = horizon_cap;
    const std::vector<double> ones(static_cast<std::size_t>(model.k() - 1), 0.0);
    p.initial_control = continuation(model, spec, table, ones).control;
    return p;
}

bool natural_stop(const Policy& policy, const LikelihoodState& state) {
    const double g = terminal_cost_g(*policy.spec, state);
    const double cont =
        stage_cost(*policy.spec, state) +
        continuation(*policy.model, *policy.spec, *policy.table, state).value;
    return g <= cont; // ties stop
}

bool should_stop(const Policy& policy, const LikelihoodState& state) {
    if (state.n >= policy.horizon_cap) return true; // forced stop
    return natural_stop(policy, state);
}

int next_control(const Policy& policy, const LikelihoodState& state) {
    return continuation(*policy.model, *policy.spec, *policy.table, state).control;
}

LikelihoodState step(const Policy& policy, const LikelihoodState& state, const Outcome& y) {
    return advance(*policy.model, state, next_control(policy, state), y);
}

int decide(const Policy& policy, const LikelihoodState& state) {
    return accept_decision(*policy.spec, state);
}

namespace {

// Forward recursion over distinct states keyed by quantized log-z. Exact for
// discrete models up to the 1e-12 position quantum.
std::vector<double> exact_unfired_mass(const Policy& policy) {
    const ControlledModel& model = *policy.model;
    const int k = model.k();
    const int dims = k - 1;
    constexpr double kQuantum = 1e-12;

    struct State {
        std::array<double, 3> log_z;
        std::vector<double> mass;
    };
    using Key = std::array<std::int64_t, 3>;
    auto key_of = [&](const std::array<double, 3>& lz) {
        Key key{0, 0, 0};
        for (int d = 0; d < dims; ++d)
            key[static_cast<std::size_t>(d)] =
                std::isfinite(lz[static_cast<std::size_t>(d)])
                    ? static_cast<std::int64_t>(std::llround(lz[static_cast<std::size_t>(d)] / kQuantum))
                    : std::numeric_limits<std::int64_t>::min();
        return key;
    };

    std::map<Key, State> cur;
    {
        State init;
        init.log_z.fill(0.0);
        init.mass.assign(static_cast<std::size_t>(k), 1.0);
        cur.emplace(key_of(init.log_z), std::move(init));
    }
    const auto& d = model.discrete_observation();
    LikelihoodState probe = LikelihoodState::initial(k);
    std::vector<double> unfired(static_cast<std::size_t>(k), 0.0);
    constexpr double kMassFloor = 1e-30;

    for (long n = 0; n < policy.horizon_cap && !cur.empty(); ++n) {
        std::map<Key, State> next;
        for (auto& [key, st] : cur) {
            double top = 0.0;
            for (double m : st.mass) top = std::max(top, m);
            if (top < kMassFloor) continue;
            probe.n = n;
            probe.log_z.assign(st.log_z.begin(), st.log_z.begin() + dims);
            if (n > 0 && natural_stop(policy, probe)) continue;
            const int x = (n == 0) ? policy.initial_control : next_control(policy, probe);
            const H1Kernel& kern = model.h1_kernel(x);
            for (std::size_t e = 0; e < kern.weight.size(); ++e) {
                std::array<double, 3> lz = st.log_z;
                for (int dd = 0; dd < dims; ++dd)
                    lz[static_cast<std::size_t>(dd)] += kern.log_inc[e][static_cast<std::size_t>(dd)];
                const int y = kern.outcome_index[e];
                auto [it, inserted] = next.try_emplace(key_of(lz));
                State& child = it->second;
                if (inserted) {
                    child.log_z = lz;
                    child.mass.assign(static_cast<std::size_t>(k), 0.0);
                }
                for (int i = 0; i < k; ++i)
                    child.mass[static_cast<std::size_t>(i)] +=
                        st.mass[static_cast<std::size_t>(i)] * d.pmf[i][x][y];
            }
        }
        cur.swap(next);
    }
    for (const auto& [key, st] : cur) {
        probe.n = policy.horizon_cap;
        probe.log_z.assign(st.log_z.begin(), st.log_z.begin() + dims);
        if (natural_stop(policy, probe)) continue; // fired exactly at the cap
        for (int i = 0; i < k; ++i) unfired[static_cast<std::size_t>(i)] += st.mass[static_cast<std::size_t>(i)];
    }
    return unfired;
}

std::vector<double> mc_unfired_mass(const Policy& policy, long reps, std::uint64_t seed) {
    const ControlledModel& model = *policy.model;
    const int k = model.k();
    std::vector<double> unfired(static_cast<std::size_t>(k), 0.0);
    for (int i = 1; i <= k; ++i) {
        long count = 0;
        for (long rep = 0; rep < reps; ++rep) {
            auto engine = substream_engine(seed, static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(rep));
            LikelihoodState st = LikelihoodState::initial(k);
            bool fired = false;
            while (st.n < policy.horizon_cap) {
                if (st.n >= 1 && natural_stop(policy, st)) {
                    fired = true;
                    break;
                }
                const int x = next_control(policy, st);
                const double y = model.sample(i, x, engine);
                st = advance(model, st, x, Outcome{y});
            }
            if (!fired && natural_stop(policy, st)) fired = true;
            if (!fired) ++count;
        }
        unfired[static_cast<std::size_t>(i - 1)] = static_cast<double>(count) / static_cast<double>(reps);
    }
    return unfired;
}

} // namespace

TerminationReport termination_diagnostic(const Policy& policy, const TerminationOptions& opts) {
    TerminationReport report;
    report.horizon_cap = policy.horizon_cap;
    if (policy.model->discrete()) {
        report.mass = exact_unfired_mass(policy);
        report.method = "exact";
    } else {
        report.mass = mc_unfired_mass(policy, opts.reps, opts.seed);
        report.method = "monte_carlo";
        report.reps = opts.reps;
        report.seed = opts.seed;
    }
    report.in_termination_class = true;
    for (double m : report.mass)
        if (!(m < 1e-6)) report.in_termination_class = false;
    return report;
}

} // namespace seqctl
