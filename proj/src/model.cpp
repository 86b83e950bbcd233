// Controlled experiment: densities, likelihood-ratio increments, H1 kernels,
// and the model invariant checks.

#include "seqctl/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "seqctl/errors.hpp"

namespace seqctl {

namespace {

constexpr double kPmfSumTol = 1e-12;
constexpr double kQuadSumTol = 1e-8;

std::string describe(int hyp, const std::string& control, const std::string& outcome) {
    return "(i=" + std::to_string(hyp) + ", x=" + control + ", y=" + outcome + ")";
}

double normal_pdf(double y, double mean, double sd) {
    static const double inv_sqrt_2pi = 0.3989422804014327;
    const double t = (y - mean) / sd;
    return inv_sqrt_2pi / sd * std::exp(-0.5 * t * t);
}

} // namespace

ControlledModel ControlledModel::make_discrete(std::vector<std::string> controls,
                                               DiscreteObservation obs,
                                               std::string config_json) {
    ControlledModel m;
    m.k_ = static_cast<int>(obs.pmf.size());
    m.controls_ = std::move(controls);
    m.obs_ = std::move(obs);
    m.config_ = std::move(config_json);
    if (m.k_ < 2) throw ConfigError("model: need k >= 2 hypotheses");
    if (m.controls_.empty()) throw ConfigError("model: need at least one control");
    const auto& d = std::get<DiscreteObservation>(m.obs_);
    for (const auto& per_hyp : d.pmf) {
        if (per_hyp.size() != m.controls_.size())
            throw ConfigError("model: pmf control dimension mismatch");
        for (const auto& row : per_hyp)
            if (row.size() != d.outcomes.size())
                throw ConfigError("model: pmf outcome dimension mismatch");
    }
    m.build_kernels();
    return m;
}

ControlledModel ControlledModel::make_continuous(int k, std::vector<std::string> controls,
                                                 ContinuousObservation obs,
                                                 std::string config_json) {
    ControlledModel m;
    m.k_ = k;
    m.controls_ = std::move(controls);
    m.obs_ = std::move(obs);
    m.config_ = std::move(config_json);
    if (m.k_ < 2) throw ConfigError("model: need k >= 2 hypotheses");
    if (m.controls_.empty()) throw ConfigError("model: need at least one control");
    const auto& c = std::get<ContinuousObservation>(m.obs_);
    if (!c.density) throw ConfigError("model: continuous density evaluator missing");
    if (c.quadrature.size() != m.controls_.size())
        throw ConfigError("model: one quadrature rule per control required");
    m.build_kernels();
    return m;
}

ControlledModel ControlledModel::gaussian_mean(std::vector<double> means, double sd,
                                               std::vector<std::string> control_labels,
                                               std::vector<double> control_values,
                                               int quadrature_nodes,
                                               std::string config_json) {
    if (sd <= 0.0) throw ConfigError("gaussian_mean: std must be positive");
    if (control_labels.size() != control_values.size())
        throw ConfigError("gaussian_mean: control label/value mismatch");
    if (quadrature_nodes < 2) throw ConfigError("gaussian_mean: need >= 2 quadrature nodes");
    const int k = static_cast<int>(means.size());

    ContinuousObservation obs;
    obs.density = [means, sd, control_values](int hyp, int control, double y) {
        return normal_pdf(y, means[hyp] * control_values[control], sd);
    };
    obs.quadrature.reserve(control_labels.size());
    for (double xv : control_values)
        obs.quadrature.push_back(normal_expectation_rule(means[0] * xv, sd, quadrature_nodes));
    obs.sample = [means, sd, control_values](int hyp, int control, std::mt19937_64& eng) {
        std::normal_distribution<double> noise(0.0, 1.0);
        return means[hyp] * control_values[control] + sd * noise(eng);
    };

    ControlledModel m = make_continuous(k, control_labels, std::move(obs), std::move(config_json));
    m.control_values_ = std::move(control_values);
    return m;
}

void ControlledModel::build_kernels() {
    kernels_.assign(controls_.size(), H1Kernel{});
    for (int x = 0; x < control_count(); ++x) {
        H1Kernel& kern = kernels_[x];
        if (discrete()) {
            const auto& d = std::get<DiscreteObservation>(obs_);
            for (int y = 0; y < static_cast<int>(d.outcomes.size()); ++y) {
                const double p1 = d.pmf[0][x][y];
                if (p1 <= 0.0) continue; // zero mass under H1, never observed
                kern.weight.push_back(p1);
                kern.outcome_index.push_back(y);
                std::vector<double> inc(k_ - 1);
                for (int r = 1; r < k_; ++r)
                    inc[r - 1] = std::log(d.pmf[r][x][y]) - std::log(p1);
                kern.log_inc.push_back(std::move(inc));
            }
        } else {
            const auto& c = std::get<ContinuousObservation>(obs_);
            const QuadratureRule& rule = c.quadrature[x];
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double y = rule.nodes[q];
                const double f1 = c.density(0, x, y);
                if (f1 <= 0.0)
                    throw ConfigError("model: quadrature node with zero H1 density at control " +
                                      controls_[x]);
                kern.weight.push_back(rule.weights[q]);
                kern.outcome_value.push_back(y);
                std::vector<double> inc(k_ - 1);
                for (int r = 1; r < k_; ++r)
                    inc[r - 1] = std::log(c.density(r, x, y)) - std::log(f1);
                kern.log_inc.push_back(std::move(inc));
            }
        }
    }
}

int ControlledModel::control_index(const std::string& label) const {
    auto it = std::find(controls_.begin(), controls_.end(), label);
    if (it == controls_.end()) throw ConfigError("unknown control label: " + label);
    return static_cast<int>(it - controls_.begin());
}

const DiscreteObservation& ControlledModel::discrete_observation() const {
    if (!discrete()) throw ConfigError("model is not discrete");
    return std::get<DiscreteObservation>(obs_);
}

const ContinuousObservation& ControlledModel::continuous_observation() const {
    if (discrete()) throw ConfigError("model is not continuous");
    return std::get<ContinuousObservation>(obs_);
}

int ControlledModel::outcome_index(const std::string& label) const {
    const auto& d = discrete_observation();
    auto it = std::find(d.outcomes.begin(), d.outcomes.end(), label);
    if (it == d.outcomes.end()) throw ConfigError("unknown outcome label: " + label);
    return static_cast<int>(it - d.outcomes.begin());
}

double ControlledModel::control_value(int control) const {
    if (control_values_.empty())
        throw ConfigError("model carries no numeric control values");
    return control_values_.at(static_cast<std::size_t>(control));
}

double ControlledModel::density(int hyp, int control, const Outcome& y) const {
    if (hyp < 1 || hyp > k_) throw ConfigError("density: hypothesis index out of range");
    if (control < 0 || control >= control_count())
        throw ConfigError("density: control index out of range");
    if (discrete()) {
        const auto& d = std::get<DiscreteObservation>(obs_);
        if (!std::holds_alternative<int>(y))
            throw ConfigError("density: discrete model expects an outcome index");
        const int yi = std::get<int>(y);
        if (yi < 0 || yi >= static_cast<int>(d.outcomes.size()))
            throw ConfigError("density: outcome index out of range");
        return d.pmf[hyp - 1][control][yi];
    }
    const auto& c = std::get<ContinuousObservation>(obs_);
    if (!std::holds_alternative<double>(y))
        throw ConfigError("density: continuous model expects a numeric observation");
    return c.density(hyp - 1, control, std::get<double>(y));
}

std::vector<double> ControlledModel::log_lr_increment(int control, const Outcome& y) const {
    const double f1 = density(1, control, y);
    if (f1 <= 0.0)
        throw AbsContinuityError("observation has zero density under H_1 at control " +
                                 controls_[control]);
    std::vector<double> inc(k_ - 1);
    for (int r = 2; r <= k_; ++r)
        inc[r - 2] = std::log(density(r, control, y)) - std::log(f1);
    return inc;
}

std::vector<double> ControlledModel::lr_increment(int control, const Outcome& y) const {
    std::vector<double> inc = log_lr_increment(control, y);
    for (double& v : inc) v = std::exp(v);
    return inc;
}

double ControlledModel::integrate_under_h1(
    int control, const std::function<double(const Outcome&)>& h) const {
    if (control < 0 || control >= control_count())
        throw ConfigError("integrate_under_h1: control index out of range");
    double sum = 0.0;
    if (discrete()) {
        const auto& d = std::get<DiscreteObservation>(obs_);
        for (int y = 0; y < static_cast<int>(d.outcomes.size()); ++y) {
            const double w = d.pmf[0][control][y];
            if (w > 0.0) sum += w * h(Outcome{y});
        }
    } else {
        const auto& c = std::get<ContinuousObservation>(obs_);
        const QuadratureRule& rule = c.quadrature[control];
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            sum += rule.weights[q] * h(Outcome{rule.nodes[q]});
    }
    return sum;
}

std::vector<std::string> ControlledModel::validate() const {
    std::vector<std::string> violations;
    if (discrete()) {
        const auto& d = std::get<DiscreteObservation>(obs_);
        for (int i = 0; i < k_; ++i) {
            for (int x = 0; x < control_count(); ++x) {
                double sum = 0.0;
                for (int y = 0; y < static_cast<int>(d.outcomes.size()); ++y) {
                    const double p = d.pmf[i][x][y];
                    if (p < 0.0 || p > 1.0)
                        violations.push_back("pmf entry outside [0,1] at " +
                                             describe(i + 1, controls_[x], d.outcomes[y]));
                    sum += p;
                }
                if (std::abs(sum - 1.0) > kPmfSumTol) {
                    char buf[160];
                    std::snprintf(buf, sizeof(buf),
                                  "pmf row does not sum to 1 (i=%d, x=%s, sum=%.17g)", i + 1,
                                  controls_[x].c_str(), sum);
                    violations.emplace_back(buf);
                }
            }
        }
        for (int x = 0; x < control_count(); ++x)
            for (int y = 0; y < static_cast<int>(d.outcomes.size()); ++y)
                if (d.pmf[0][x][y] == 0.0)
                    for (int i = 1; i < k_; ++i)
                        if (d.pmf[i][x][y] > 0.0)
                            violations.push_back("absolute continuity violated at " +
                                                 describe(i + 1, controls_[x], d.outcomes[y]) +
                                                 ": f_1 = 0 but f_i > 0");
    } else {
        const auto& c = std::get<ContinuousObservation>(obs_);
        for (int x = 0; x < control_count(); ++x) {
            const QuadratureRule& rule = c.quadrature[x];
            if (rule.nodes.size() != rule.weights.size() || rule.nodes.empty()) {
                violations.push_back("quadrature rule malformed at control " + controls_[x]);
                continue;
            }
            double sum = 0.0;
            for (double w : rule.weights) {
                if (w <= 0.0)
                    violations.push_back("non-positive quadrature weight at control " +
                                         controls_[x]);
                sum += w;
            }
            if (std::abs(sum - 1.0) > kQuadSumTol) {
                char buf[128];
                std::snprintf(buf, sizeof(buf),
                              "quadrature weights sum to %.17g at control %s", sum,
                              controls_[x].c_str());
                violations.emplace_back(buf);
            }
        }
    }
    return violations;
}

void ControlledModel::ensure_valid() const {
    auto violations = validate();
    if (violations.empty()) return;
    std::ostringstream msg;
    msg << "model validation failed:";
    for (const auto& v : violations) msg << "\n  - " << v;
    throw ConfigError(msg.str());
}

bool ControlledModel::can_sample() const {
    if (discrete()) return true;
    return static_cast<bool>(std::get<ContinuousObservation>(obs_).sample);
}

double ControlledModel::sample(int hyp, int control, std::mt19937_64& engine) const {
    if (discrete()) {
        const auto& d = std::get<DiscreteObservation>(obs_);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(engine);
        double acc = 0.0;
        const auto& row = d.pmf[hyp - 1][control];
        for (std::size_t y = 0; y + 1 < row.size(); ++y) {
            acc += row[y];
            if (u < acc) return static_cast<double>(y);
        }
        return static_cast<double>(row.size() - 1);
    }
    const auto& c = std::get<ContinuousObservation>(obs_);
    if (!c.sample) throw ConfigError("model has no sampler; Monte Carlo unavailable");
    return c.sample(hyp - 1, control, engine);
}

std::vector<double> LikelihoodState::z() const {
    std::vector<double> out(log_z.size());
    for (std::size_t i = 0; i < log_z.size(); ++i) out[i] = std::exp(log_z[i]);
    return out;
}

LikelihoodState advance(const ControlledModel& model, const LikelihoodState& state,
                        int control, const Outcome& y) {
    std::vector<double> inc = model.log_lr_increment(control, y);
    LikelihoodState next = state;
    for (std::size_t r = 0; r < inc.size(); ++r) next.log_z[r] += inc[r];
    next.n = state.n + 1;
    return next;
}

} // namespace seqctl
