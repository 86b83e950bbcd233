#include "seqctl/criteria.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "seqctl/errors.hpp"

namespace seqctl {

void LossSpec::validate() const {
    const int n = k();
    if (n < 2) throw ConfigError("loss: need k >= 2");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(lambda[i].size()) != n)
            throw ConfigError("loss: lambda must be a k x k matrix");
        if (lambda[i][i] != 0.0) throw ConfigError("loss: lambda diagonal must be zero");
        for (int j = 0; j < n; ++j)
            if (lambda[i][j] < 0.0) throw ConfigError("loss: lambda entries must be >= 0");
    }
    if (static_cast<int>(cost_weights.size()) != n)
        throw ConfigError("loss: cost_weights must have k entries");
    double total = 0.0;
    for (double c : cost_weights) {
        if (c < 0.0) throw ConfigError("loss: cost_weights must be >= 0");
        total += c;
    }
    if (total == 0.0) throw ConfigError("loss: cost_weights must not all be zero");
}

LossSpec LossSpec::uniform(int k, double multiplier, std::vector<double> cost_weights) {
    LossSpec spec;
    spec.lambda.assign(k, std::vector<double>(k, multiplier));
    for (int i = 0; i < k; ++i) spec.lambda[i][i] = 0.0;
    if (cost_weights.empty()) {
        spec.cost_weights.assign(k, 0.0);
        spec.cost_weights[0] = 1.0;
    } else {
        spec.cost_weights = std::move(cost_weights);
    }
    return spec;
}

void BayesSpec::validate() const {
    const int n = k();
    if (n < 2) throw ConfigError("bayes: need k >= 2");
    double sum = 0.0;
    for (double p : priors) {
        if (p <= 0.0) throw ConfigError("bayes: priors must be positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("bayes: priors must sum to 1");
    if (static_cast<int>(losses.size()) != n)
        throw ConfigError("bayes: losses must be a k x k matrix");
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(losses[i].size()) != n)
            throw ConfigError("bayes: losses must be a k x k matrix");
        if (losses[i][i] != 0.0) throw ConfigError("bayes: loss diagonal must be zero");
        for (double w : losses[i])
            if (w < 0.0) throw ConfigError("bayes: losses must be >= 0");
    }
    if (cost <= 0.0) throw ConfigError("bayes: observation cost must be positive");
}

namespace {

inline double z_component(std::span<const double> z, int i) {
    // hypothesis index i is 1-based; z_1 == 1 by definition
    return i == 1 ? 1.0 : z[static_cast<std::size_t>(i - 2)];
}

} // namespace

double terminal_cost_g(const LossSpec& spec, std::span<const double> z) {
    const int k = spec.k();
    double best = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= k; ++j) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i)
            if (i != j) s += spec.lambda[i - 1][j - 1] * z_component(z, i);
        if (s < best) best = s;
    }
    return best;
}

int accept_decision(const LossSpec& spec, std::span<const double> z) {
    const int k = spec.k();
    double best = std::numeric_limits<double>::infinity();
    int arg = 1;
    for (int j = 1; j <= k; ++j) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i)
            if (i != j) s += spec.lambda[i - 1][j - 1] * z_component(z, i);
        if (s < best) {
            best = s;
            arg = j;
        }
    }
    return arg;
}

double stage_cost(const LossSpec& spec, std::span<const double> z) {
    double s = spec.cost_weights[0];
    for (std::size_t r = 0; r + 1 < spec.cost_weights.size(); ++r)
        s += spec.cost_weights[r + 1] * z[r];
    return s;
}

double terminal_cost_g(const LossSpec& spec, const LikelihoodState& state) {
    return terminal_cost_g(spec, state.z());
}

int accept_decision(const LossSpec& spec, const LikelihoodState& state) {
    return accept_decision(spec, state.z());
}

double stage_cost(const LossSpec& spec, const LikelihoodState& state) {
    return stage_cost(spec, state.z());
}

LossSpec bayes_to_lagrange(const BayesSpec& bayes) {
    bayes.validate();
    const int k = bayes.k();
    LossSpec spec;
    spec.lambda.assign(k, std::vector<double>(k, 0.0));
    spec.cost_weights.assign(k, 0.0);
    for (int i = 0; i < k; ++i) {
        spec.cost_weights[i] = bayes.cost * bayes.priors[i];
        for (int j = 0; j < k; ++j)
            if (i != j) spec.lambda[i][j] = bayes.priors[i] * bayes.losses[i][j];
    }
    return spec;
}

std::string canonical_text(const LossSpec& spec) {
    std::string out = "loss:k=" + std::to_string(spec.k());
    char buf[40];
    out += ";lambda=";
    for (const auto& row : spec.lambda)
        for (double v : row) {
            std::snprintf(buf, sizeof(buf), "%.17g,", v);
            out += buf;
        }
    out += ";cost=";
    for (double v : spec.cost_weights) {
        std::snprintf(buf, sizeof(buf), "%.17g,", v);
        out += buf;
    }
    return out;
}

} // namespace seqctl
