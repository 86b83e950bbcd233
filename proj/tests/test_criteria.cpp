#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "seqctl/criteria.hpp"
#include "seqctl/errors.hpp"

using namespace seqctl;

namespace {

// Independent oracle: evaluate every candidate sum literally and track the min.
double g_by_enumeration(const LossSpec& spec, const std::vector<double>& z_tail) {
    std::vector<double> z{1.0};
    z.insert(z.end(), z_tail.begin(), z_tail.end());
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < spec.k(); ++j) {
        double s = 0.0;
        for (int i = 0; i < spec.k(); ++i)
            if (i != j) s += spec.lambda[i][j] * z[i];
        best = std::min(best, s);
    }
    return best;
}

} // namespace

TEST_CASE("terminal cost g") {
    auto sym = LossSpec::uniform(2, 100.0);
    CHECK(terminal_cost_g(sym, std::vector<double>{1.0}) == doctest::Approx(100.0));
    CHECK(terminal_cost_g(sym, std::vector<double>{0.01}) == doctest::Approx(1.0));

    auto three = LossSpec::uniform(3, 10.0);
    const std::vector<double> z{0.2, 0.3};
    // oracle sums: 10(0.2+0.3) = 5, 10(1+0.3) = 13, 10(1+0.2) = 12
    CHECK(g_by_enumeration(three, z) == doctest::Approx(5.0));
    CHECK(terminal_cost_g(three, z) == doctest::Approx(g_by_enumeration(three, z)));
}

TEST_CASE("accept_decision") {
    auto sym = LossSpec::uniform(2, 100.0);
    CHECK(accept_decision(sym, std::vector<double>{2.0}) == 2);
    CHECK(accept_decision(sym, std::vector<double>{1.0}) == 1); // tie to smallest index

    auto three = LossSpec::uniform(3, 10.0);
    CHECK(accept_decision(three, std::vector<double>{0.2, 0.3}) == 1);
}

TEST_CASE("k=2 decision boundary is the single threshold lambda12/lambda21") {
    LossSpec spec;
    spec.lambda = {{0.0, 30.0}, {70.0, 0.0}};
    spec.cost_weights = {1.0, 0.0};
    const double threshold = 30.0 / 70.0;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> zs(0.0, 2.0);
    for (int t = 0; t < 200; ++t) {
        const double z = zs(rng);
        const int dec = accept_decision(spec, std::vector<double>{z});
        if (70.0 * z > 30.0) CHECK(dec == 2);
        else CHECK(dec == 1);
    }
    CHECK(accept_decision(spec, std::vector<double>{threshold}) == 1); // tie stays at H_1
}

TEST_CASE("stage cost") {
    auto def = LossSpec::uniform(2, 100.0);
    CHECK(stage_cost(def, std::vector<double>{123.0}) == doctest::Approx(1.0));
    LossSpec both = def;
    both.cost_weights = {1.0, 1.0};
    CHECK(stage_cost(both, std::vector<double>{0.5}) == doctest::Approx(1.5));
    both.cost_weights = {0.3, 0.7};
    CHECK(stage_cost(both, std::vector<double>{2.0}) == doctest::Approx(1.7));
}

TEST_CASE("bayes adapter") {
    BayesSpec b;
    b.priors = {0.5, 0.5};
    b.losses = {{0.0, 200.0}, {200.0, 0.0}};
    b.cost = 1.0;
    auto spec = bayes_to_lagrange(b);
    CHECK(spec.lambda[0][1] == doctest::Approx(100.0));
    CHECK(spec.lambda[1][0] == doctest::Approx(100.0));
    CHECK(spec.cost_weights[0] == doctest::Approx(0.5));
    CHECK(spec.cost_weights[1] == doctest::Approx(0.5));

    BayesSpec skew;
    skew.priors = {0.9, 0.1};
    skew.losses = {{0.0, 10.0}, {90.0, 0.0}};
    skew.cost = 2.0;
    auto s2 = bayes_to_lagrange(skew);
    CHECK(s2.lambda[0][1] == doctest::Approx(9.0));
    CHECK(s2.lambda[1][0] == doctest::Approx(9.0));
    CHECK(s2.cost_weights[0] == doctest::Approx(1.8));
    CHECK(s2.cost_weights[1] == doctest::Approx(0.2));

    BayesSpec uniform;
    uniform.priors = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    uniform.losses = {{0.0, 3.0, 3.0}, {3.0, 0.0, 3.0}, {3.0, 3.0, 0.0}};
    uniform.cost = 0.7;
    auto s3 = bayes_to_lagrange(uniform);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(s3.lambda[i][j] == doctest::Approx(1.0));
}

TEST_CASE("g is positively homogeneous and the argmin is scale invariant") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.01, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + static_cast<int>(rng() % 3);
        LossSpec spec;
        spec.lambda.assign(k, std::vector<double>(k, 0.0));
        spec.cost_weights.assign(k, 0.0);
        spec.cost_weights[0] = 1.0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                if (i != j) spec.lambda[i][j] = unif(rng);
        std::vector<double> z(k - 1);
        for (auto& v : z) v = unif(rng);
        const double t = unif(rng);
        LossSpec scaled = spec;
        for (auto& row : scaled.lambda)
            for (auto& v : row) v *= t;
        CHECK(terminal_cost_g(scaled, z) ==
              doctest::Approx(t * terminal_cost_g(spec, z)).epsilon(1e-12));
        CHECK(accept_decision(scaled, z) == accept_decision(spec, z));
        // argmin membership is exact
        const int j = accept_decision(spec, z);
        std::vector<double> zfull{1.0};
        zfull.insert(zfull.end(), z.begin(), z.end());
        double s = 0.0;
        for (int i = 0; i < k; ++i)
            if (i != j - 1) s += spec.lambda[i][j - 1] * zfull[i];
        CHECK(s == terminal_cost_g(spec, z));
    }
}

TEST_CASE("bayes identity l_n = f1^n g(Z_n) on enumerated paths") {
    auto coin = fixtures::coin2();
    BayesSpec b;
    b.priors = {0.35, 0.65};
    b.losses = {{0.0, 120.0}, {80.0, 0.0}};
    b.cost = 1.0;
    auto spec = bayes_to_lagrange(b);
    const auto& pmf = coin.discrete_observation().pmf;
    // enumerate all control/outcome paths to horizon 4
    for (int mask = 0; mask < (1 << 8); ++mask) {
        double f1 = 1.0, f2 = 1.0;
        for (int step = 0; step < 4; ++step) {
            const int x = (mask >> (2 * step)) & 1;
            const int y = (mask >> (2 * step + 1)) & 1;
            f1 *= pmf[0][x][y];
            f2 *= pmf[1][x][y];
        }
        // l_n literally: min_j sum_i pi_i w_ij f_i^n
        double l_n = std::numeric_limits<double>::infinity();
        for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            const double fs[2] = {f1, f2};
            for (int i = 0; i < 2; ++i)
                if (i != j) s += b.priors[i] * b.losses[i][j] * fs[i];
            l_n = std::min(l_n, s);
        }
        const std::vector<double> z{f2 / f1};
        CHECK(l_n == doctest::Approx(f1 * terminal_cost_g(spec, z)).epsilon(1e-12));
    }
}

TEST_CASE("spec validation") {
    LossSpec bad = LossSpec::uniform(2, 10.0);
    bad.lambda[0][0] = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    LossSpec zero_cost = LossSpec::uniform(2, 10.0);
    zero_cost.cost_weights = {0.0, 0.0};
    CHECK_THROWS_AS(zero_cost.validate(), ConfigError);
    BayesSpec b;
    b.priors = {0.6, 0.5};
    b.losses = {{0.0, 1.0}, {1.0, 0.0}};
    b.cost = 1.0;
    CHECK_THROWS_AS(b.validate(), ConfigError);
}
