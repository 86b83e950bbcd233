#pragma once

#include <functional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "seqctl/quadrature.hpp"

namespace seqctl {

/// An observed value: outcome index for discrete spaces, real value otherwise.
using Outcome = std::variant<int, double>;

struct DiscreteObservation {
    std::vector<std::string> outcomes;
    // pmf[hyp][control][outcome], hyp and control 0-based
    std::vector<std::vector<std::vector<double>>> pmf;
};

struct ContinuousObservation {
    // density(hyp, control, y), hyp 0-based; must be everywhere non-negative
    std::function<double(int, int, double)> density;
    std::vector<QuadratureRule> quadrature; // one rule per control, under H1
    // sample(hyp, control, engine); required for Monte Carlo evaluation
    std::function<double(int, int, std::mt19937_64&)> sample;
};

// Finite transition kernel under H1 for one control: weights w_e with the
// per-hypothesis log likelihood-ratio increments at each support point.
struct H1Kernel {
    std::vector<double> weight;
    std::vector<std::vector<double>> log_inc; // [entry][r-2] for r = 2..k
    std::vector<int> outcome_index;           // discrete models
    std::vector<double> outcome_value;        // continuous models
};

/// The controlled experiment: k simple hypotheses, a finite control set, and
/// per-control observation distributions f_i(y|x) with f_1 as the reference.
class ControlledModel {
public:
    static ControlledModel make_discrete(std::vector<std::string> controls,
                                         DiscreteObservation obs,
                                         std::string config_json = {});

    static ControlledModel make_continuous(int k, std::vector<std::string> controls,
                                           ContinuousObservation obs,
                                           std::string config_json = {});

    // Normal response with mean theta_i * x and known sd; quadrature under H1.
    static ControlledModel gaussian_mean(std::vector<double> means, double sd,
                                         std::vector<std::string> control_labels,
                                         std::vector<double> control_values,
                                         int quadrature_nodes = 64,
                                         std::string config_json = {});

    int k() const { return k_; }
    int control_count() const { return static_cast<int>(controls_.size()); }
    const std::vector<std::string>& controls() const { return controls_; }
    int control_index(const std::string& label) const;

    bool discrete() const { return std::holds_alternative<DiscreteObservation>(obs_); }
    const DiscreteObservation& discrete_observation() const;
    const ContinuousObservation& continuous_observation() const;
    int outcome_index(const std::string& label) const; // discrete only
    double control_value(int control) const;           // gaussian_mean only

    /// f_i(y|x); hyp is 1-based per the hypothesis numbering H_1..H_k.
    double density(int hyp, int control, const Outcome& y) const;

    /// Vector of f_r(y|x)/f_1(y|x), r = 2..k. Throws AbsContinuityError when
    /// f_1(y|x) = 0.
    std::vector<double> lr_increment(int control, const Outcome& y) const;
    std::vector<double> log_lr_increment(int control, const Outcome& y) const;

    /// Sum_y f_1(y|x) h(y) dmu(y): exact for discrete spaces, quadrature otherwise.
    double integrate_under_h1(int control,
                              const std::function<double(const Outcome&)>& h) const;

    /// Empty when all type invariants hold; one message per violation.
    std::vector<std::string> validate() const;
    void ensure_valid() const; // throws ConfigError listing violations

    const H1Kernel& h1_kernel(int control) const { return kernels_[control]; }

    bool can_sample() const;
    double sample(int hyp, int control, std::mt19937_64& engine) const;

    /// Canonical JSON text of the configuration this model was built from.
    const std::string& config_text() const { return config_; }

    ControlledModel() = default; // empty shell; populate via the named builders

private:
    void build_kernels();

    int k_ = 0;
    std::vector<std::string> controls_;
    std::variant<DiscreteObservation, ContinuousObservation> obs_;
    std::vector<H1Kernel> kernels_;
    std::vector<double> control_values_; // gaussian_mean convenience
    std::string config_;
};

/// The likelihood-ratio state Z_n = (Z_n^2, ..., Z_n^k), held in log scale.
struct LikelihoodState {
    std::vector<double> log_z; // size k-1; component r-2 holds log Z_n^r
    long n = 0;

    static LikelihoodState initial(int k) {
        return LikelihoodState{std::vector<double>(static_cast<std::size_t>(k - 1), 0.0), 0};
    }
    std::vector<double> z() const;
};

/// State update: multiply in the likelihood-ratio increment of (control, y).
LikelihoodState advance(const ControlledModel& model, const LikelihoodState& state,
                        int control, const Outcome& y);

} // namespace seqctl
