#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "seqctl/errors.hpp"
#include "seqctl/value.hpp"

using namespace seqctl;

namespace {

GridSpec coin_grid(int m = 1001, double lo = -25.0, double hi = 25.0) {
    GridSpec g;
    g.axes.push_back({lo, hi, m, {}});
    return g;
}

std::size_t node_at_zero(const ValueTable& t) {
    const auto& axis = t.axes[0];
    std::size_t best = 0;
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (std::abs(axis[i]) < std::abs(axis[best])) best = i;
    REQUIRE(std::abs(axis[best]) < 1e-12);
    return best;
}

} // namespace

TEST_CASE("one bellman sweep reproduces the hand-expanded sums at z = 1") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    auto rho0 = make_terminal_table(coin, loss, coin_grid());
    // hand oracle: control b gives 1 + 0.5 g(1.8) + 0.5 g(0.2) = 61,
    // control a gives 1 + 0.5 g(1.4) + 0.5 g(0.6) = 81; stopping costs 100
    const double gb = 1.0 + 0.5 * std::min(100.0 * 1.8, 100.0) + 0.5 * std::min(100.0 * 0.2, 100.0);
    const double ga = 1.0 + 0.5 * std::min(100.0 * 1.4, 100.0) + 0.5 * std::min(100.0 * 0.6, 100.0);
    CHECK(gb == 61.0);
    CHECK(ga == 81.0);
    auto rho1 = bellman_apply(coin, loss, rho0);
    CHECK(rho1.values[node_at_zero(rho1)] == doctest::Approx(61.0).epsilon(1e-12));
}

TEST_CASE("stopping wins where g is below the stage cost") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    GridSpec grid = coin_grid();
    grid.axes[0].extra.push_back(std::log(0.005));
    auto rho1 = truncated_rho(coin, loss, grid, 1);
    const RhoView rho(rho1, loss);
    const double q = std::log(0.005);
    CHECK(rho(std::vector<double>{q}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("terminal table is g everywhere") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    auto rho0 = truncated_rho(coin, loss, coin_grid(101), 0);
    for (std::size_t p = 0; p < rho0.node_count(); ++p) {
        const double z = std::exp(rho0.axes[0][p]);
        CHECK(rho0.values[p] == doctest::Approx(std::min(100.0 * z, 100.0)).epsilon(1e-12));
    }
    CHECK(rho0.iterations == 0);
}

TEST_CASE("solve_rho on COIN2") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    auto table = solve_rho(coin, loss, coin_grid());
    CHECK(table.converged);
    CHECK(table.residual < 1e-6);
    CHECK(table.iterations <= 300);
    CHECK(table.values[node_at_zero(table)] <= 61.0 + 1e-9);
    // bounds: 0 <= rho <= g
    for (std::size_t p = 0; p < table.node_count(); ++p) {
        const double z = std::exp(table.axes[0][p]);
        CHECK(table.values[p] >= 0.0);
        CHECK(table.values[p] <= std::min(100.0 * z, 100.0) + 1e-12);
    }
}

TEST_CASE("multipliers below the stage cost leave rho = g and stop immediately") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss(0.5);
    auto table = solve_rho(coin, loss, coin_grid());
    CHECK(table.converged);
    CHECK(table.iterations == 1); // first sweep already has zero residual
    for (std::size_t p = 0; p < table.node_count(); ++p) {
        const double z = std::exp(table.axes[0][p]);
        CHECK(table.values[p] == doctest::Approx(std::min(0.5 * z, 0.5)).epsilon(1e-12));
    }
    CHECK(trivial_procedure_optimal(coin, loss, table));
}

TEST_CASE("truncated iterates decrease pointwise in r") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    auto prev = truncated_rho(coin, loss, coin_grid(501), 0);
    for (int r = 1; r <= 10; ++r) {
        auto next = bellman_apply(coin, loss, prev);
        for (std::size_t p = 0; p < prev.node_count(); ++p)
            CHECK(next.values[p] <= prev.values[p] + 1e-10);
        prev = std::move(next);
    }
}

TEST_CASE("converged table satisfies the fixed-point equation") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    auto table = solve_rho(coin, loss, coin_grid());
    auto reapplied = bellman_apply(coin, loss, table);
    for (std::size_t p = 0; p < table.node_count(); ++p)
        CHECK(std::abs(reapplied.values[p] - table.values[p]) < 1e-6);
}

TEST_CASE("continuation at z = 1 against the two-term oracle") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    auto rho0 = make_terminal_table(coin, loss, coin_grid());
    auto c = continuation(coin, loss, rho0, LikelihoodState::initial(2));
    // oracle: b: 0.5*100 + 0.5*20 = 60, a: 0.5*100 + 0.5*60 = 80
    CHECK(c.value == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(coin.controls()[static_cast<std::size_t>(c.control)] == "b");
}

TEST_CASE("gaussian demo prefers the wider control at probed states") {
    auto gauss = fixtures::gaussian_demo();
    auto loss = fixtures::coin2_loss();
    auto table = solve_rho(gauss, loss, coin_grid(2001), SolveOptions{1e-6, 2000});
    const RhoView rho(table, loss);
    for (double q : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
        // oracle: compare the two quadrature sums directly
        double sums[2];
        for (int x = 0; x < 2; ++x) {
            const auto& kern = gauss.h1_kernel(x);
            double s = 0.0;
            for (std::size_t e = 0; e < kern.weight.size(); ++e)
                s += kern.weight[e] * rho(std::vector<double>{q + kern.log_inc[e][0]});
            sums[x] = s;
        }
        CHECK(sums[1] < sums[0]);
        auto c = continuation(gauss, loss, table, std::vector<double>{q});
        CHECK(c.control == 1);
        CHECK(c.value == doctest::Approx(sums[1]).epsilon(1e-12));
    }
}

TEST_CASE("symmetric controls tie to the first") {
    DiscreteObservation obs;
    obs.outcomes = {"0", "1"};
    obs.pmf = {
        {{0.5, 0.5}, {0.5, 0.5}},
        {{0.2, 0.8}, {0.2, 0.8}},
    };
    auto model = ControlledModel::make_discrete({"a", "b"}, obs);
    auto loss = fixtures::coin2_loss(50.0);
    auto rho0 = make_terminal_table(model, loss, coin_grid(101));
    auto c = continuation(model, loss, rho0, LikelihoodState::initial(2));
    CHECK(c.control == 0);
}

TEST_CASE("r0 bounds") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    auto table = solve_rho(coin, loss, coin_grid());
    const double r = r0(coin, loss, table);
    CHECK(1.0 + r <= 61.0 + 1e-9);
    CHECK(r <= 100.0); // r0 <= g(1)
    CHECK_FALSE(trivial_procedure_optimal(coin, loss, table));
}

TEST_CASE("grid rejects unsupported dimensions") {
    CHECK_THROWS_AS(GridSpec::default_for(5), ConfigError);
    CHECK_THROWS_AS(GridSpec::default_for(1), ConfigError);
    CHECK(GridSpec::default_for(2).axes.size() == 1);
    CHECK(GridSpec::default_for(3).axes[0].m == 201);
}

TEST_CASE("injected coordinates become exact interpolation nodes") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    GridSpec grid = coin_grid(101, -10.0, 10.0);
    const double q = 0.123456789;
    grid.axes[0].extra = {q};
    auto table = make_terminal_table(coin, loss, grid);
    const RhoView rho(table, loss);
    CHECK(rho(std::vector<double>{q}) ==
          doctest::Approx(std::min(100.0 * std::exp(q), 100.0)).epsilon(1e-14));
}

TEST_CASE("beyond-bounds queries evaluate the stopping cost") {
    auto coin = fixtures::coin2();
    auto loss = fixtures::coin2_loss();
    auto table = solve_rho(coin, loss, coin_grid(101, -5.0, 5.0));
    const RhoView rho(table, loss);
    CHECK(rho(std::vector<double>{-7.0}) ==
          doctest::Approx(100.0 * std::exp(-7.0)).epsilon(1e-12));
    CHECK(rho(std::vector<double>{9.0}) == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("two-dimensional solve stays monotone and bounded (k = 3)") {
    std::mt19937_64 rng(23);
    auto model = fixtures::random_discrete(rng, 3, 2, 3);
    auto loss = LossSpec::uniform(3, 20.0);
    GridSpec grid;
    grid.axes = {{-12.0, 12.0, 61, {}}, {-12.0, 12.0, 61, {}}};
    auto prev = truncated_rho(model, loss, grid, 0);
    for (int r = 1; r <= 6; ++r) {
        auto next = bellman_apply(model, loss, prev);
        for (std::size_t p = 0; p < prev.node_count(); ++p) {
            CHECK(next.values[p] <= prev.values[p] + 1e-10);
            CHECK(next.values[p] >= 0.0);
        }
        prev = std::move(next);
    }
}

TEST_CASE("fingerprints separate models and loss specs") {
    auto coin = fixtures::coin2();
    auto gauss = fixtures::gaussian_demo();
    auto l1 = fixtures::coin2_loss(100.0);
    auto l2 = fixtures::coin2_loss(101.0);
    CHECK(make_fingerprint(coin, l1) != make_fingerprint(coin, l2));
    CHECK(make_fingerprint(coin, l1) != make_fingerprint(gauss, l1));
    CHECK(make_fingerprint(coin, l1) == make_fingerprint(coin, l1));
}
