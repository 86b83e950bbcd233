// Shared test models.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "seqctl/criteria.hpp"
#include "seqctl/model.hpp"

namespace fixtures {

// Two coins: under H1 both controls are fair; under H2 control a shows 1 with
// probability 0.7 and control b with probability 0.9.
inline seqctl::ControlledModel coin2() {
    seqctl::DiscreteObservation obs;
    obs.outcomes = {"0", "1"};
    obs.pmf = {
        {{0.5, 0.5}, {0.5, 0.5}},
        {{0.3, 0.7}, {0.1, 0.9}},
    };
    return seqctl::ControlledModel::make_discrete({"a", "b"}, obs, "fixture:coin2");
}

inline seqctl::LossSpec coin2_loss(double lam = 100.0) {
    return seqctl::LossSpec::uniform(2, lam);
}

// The normal-regression demo: theta in {1, 2}, sd 1, controls x in {1, 2}.
inline seqctl::ControlledModel gaussian_demo(int nodes = 64) {
    return seqctl::ControlledModel::gaussian_mean({1.0, 2.0}, 1.0, {"1", "2"}, {1.0, 2.0},
                                                  nodes, "fixture:gaussian_demo");
}

// Random valid discrete model; entries bounded away from zero so likelihood
// ratios stay finite.
inline seqctl::ControlledModel random_discrete(std::mt19937_64& rng, int k, int controls,
                                               int outcomes) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    seqctl::DiscreteObservation obs;
    for (int y = 0; y < outcomes; ++y) obs.outcomes.push_back("y" + std::to_string(y));
    obs.pmf.assign(k, std::vector<std::vector<double>>(
                          controls, std::vector<double>(outcomes, 0.0)));
    for (int i = 0; i < k; ++i)
        for (int x = 0; x < controls; ++x) {
            double sum = 0.0;
            for (int y = 0; y < outcomes; ++y) {
                obs.pmf[i][x][y] = unif(rng);
                sum += obs.pmf[i][x][y];
            }
            for (int y = 0; y < outcomes; ++y) obs.pmf[i][x][y] /= sum;
            double fix = 1.0;
            for (int y = 1; y < outcomes; ++y) fix -= obs.pmf[i][x][y];
            obs.pmf[i][x][0] = fix; // exact row sum of 1
        }
    std::vector<std::string> labels;
    for (int x = 0; x < controls; ++x) labels.push_back("x" + std::to_string(x));
    static int counter = 0;
    return seqctl::ControlledModel::make_discrete(labels, obs,
                                                  "fixture:random" + std::to_string(counter++));
}

} // namespace fixtures
