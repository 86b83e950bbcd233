#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "seqctl/errors.hpp"
#include "seqctl/model.hpp"

using namespace seqctl;

TEST_CASE("density lookups") {
    auto coin = fixtures::coin2();
    CHECK(coin.density(2, coin.control_index("b"), Outcome{1}) == doctest::Approx(0.9));
    CHECK(coin.density(1, coin.control_index("a"), Outcome{0}) == doctest::Approx(0.5));

    auto gauss = fixtures::gaussian_demo();
    // H1 mean at control value 2 is 2, so the exponent vanishes at y = 2
    const double expected = 1.0 / std::sqrt(2.0 * std::acos(-1.0));
    CHECK(gauss.density(1, gauss.control_index("2"), Outcome{2.0}) ==
          doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(coin.density(3, 0, Outcome{0}), ConfigError);
    CHECK_THROWS_AS((void)coin.control_index("c"), ConfigError);
    CHECK_THROWS_AS((void)coin.outcome_index("2"), ConfigError);
}

TEST_CASE("likelihood ratio increments") {
    auto gauss = fixtures::gaussian_demo();
    auto inc1 = gauss.lr_increment(gauss.control_index("1"), Outcome{1.5});
    CHECK(inc1[0] == doctest::Approx(1.0).epsilon(1e-12)); // exp(1*1.5 - 3/2)
    auto inc2 = gauss.lr_increment(gauss.control_index("2"), Outcome{3.0});
    CHECK(inc2[0] == doctest::Approx(1.0).epsilon(1e-12)); // exp(6 - 6)

    auto coin = fixtures::coin2();
    auto incb = coin.lr_increment(coin.control_index("b"), Outcome{0});
    CHECK(incb[0] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("gaussian log ratio matches the closed form x*y - 3x^2/2") {
    auto gauss = fixtures::gaussian_demo();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ys(-6.0, 6.0);
    for (int control = 0; control < 2; ++control) {
        const double x = control + 1.0;
        for (int trial = 0; trial < 50; ++trial) {
            const double y = ys(rng);
            const auto inc = gauss.log_lr_increment(control, Outcome{y});
            CHECK(inc[0] == doctest::Approx(x * y - 1.5 * x * x).epsilon(1e-12));
        }
    }
}

TEST_CASE("absolute continuity violation on apply") {
    DiscreteObservation obs;
    obs.outcomes = {"0", "1", "2"};
    obs.pmf = {
        {{0.5, 0.5, 0.0}},
        {{0.4, 0.3, 0.3}},
    };
    auto model = ControlledModel::make_discrete({"a"}, obs);
    CHECK_THROWS_AS((void)model.lr_increment(0, Outcome{2}), AbsContinuityError);
    // and validate flags the offending entry
    auto violations = model.validate();
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("absolute continuity") != std::string::npos);
}

TEST_CASE("integrate_under_h1") {
    auto coin = fixtures::coin2();
    CHECK(coin.integrate_under_h1(0, [](const Outcome&) { return 1.0; }) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(coin.integrate_under_h1(coin.control_index("b"), [](const Outcome& y) {
              return static_cast<double>(std::get<int>(y));
          }) == doctest::Approx(0.5));

    auto gauss = fixtures::gaussian_demo();
    CHECK(gauss.integrate_under_h1(0, [](const Outcome&) { return 1.0; }) ==
          doctest::Approx(1.0).epsilon(1e-10));
    // mean of the H1 response at control x=1 is theta_1 * 1 = 1
    CHECK(gauss.integrate_under_h1(gauss.control_index("1"), [](const Outcome& y) {
              return std::get<double>(y);
          }) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("indicator integration recovers the pmf exactly") {
    auto coin = fixtures::coin2();
    for (int x = 0; x < coin.control_count(); ++x)
        for (int y = 0; y < 2; ++y) {
            const double direct = coin.density(1, x, Outcome{y});
            const double via_sum = coin.integrate_under_h1(x, [y](const Outcome& o) {
                return std::get<int>(o) == y ? 1.0 : 0.0;
            });
            CHECK(via_sum == direct);
        }
}

TEST_CASE("validate_model") {
    CHECK(fixtures::coin2().validate().empty());

    DiscreteObservation bad;
    bad.outcomes = {"0", "1"};
    bad.pmf = {
        {{0.5, 0.5}, {0.5, 0.5}},
        {{0.3, 0.7}, {0.1, 1.2}},
    };
    auto model = ControlledModel::make_discrete({"a", "b"}, bad);
    auto violations = model.validate();
    REQUIRE(violations.size() == 2); // entry outside [0,1] and a bad row sum
    CHECK_THROWS_AS(model.ensure_valid(), ConfigError);
}

TEST_CASE("ratios ignore a common rescaling of one outcome column") {
    // Scale column 0 by t for every hypothesis and absorb the change in the
    // last column: the ratio at column 0 is untouched.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ts(0.5, 1.5);
    for (int trial = 0; trial < 20; ++trial) {
        auto base = fixtures::random_discrete(rng, 3, 2, 3);
        const auto& pmf = base.discrete_observation().pmf;
        const double t = ts(rng);
        DiscreteObservation scaled;
        scaled.outcomes = base.discrete_observation().outcomes;
        scaled.pmf = pmf;
        bool feasible = true;
        for (int i = 0; i < 3 && feasible; ++i)
            for (int x = 0; x < 2 && feasible; ++x) {
                scaled.pmf[i][x][0] = t * pmf[i][x][0];
                scaled.pmf[i][x][2] = pmf[i][x][2] + (1.0 - t) * pmf[i][x][0];
                if (scaled.pmf[i][x][2] <= 0.0 || scaled.pmf[i][x][0] >= 1.0) feasible = false;
            }
        if (!feasible) continue;
        auto other = ControlledModel::make_discrete({"x0", "x1"}, scaled);
        REQUIRE(other.validate().empty());
        for (int x = 0; x < 2; ++x) {
            const auto a = base.lr_increment(x, Outcome{0});
            const auto b = other.lr_increment(x, Outcome{0});
            for (std::size_t r = 0; r < a.size(); ++r)
                CHECK(b[r] == doctest::Approx(a[r]).epsilon(1e-12));
        }
    }
}

TEST_CASE("likelihood state update") {
    auto coin = fixtures::coin2();
    auto st = LikelihoodState::initial(2);
    CHECK(st.n == 0);
    CHECK(st.z()[0] == 1.0);
    st = advance(coin, st, coin.control_index("b"), Outcome{0});
    CHECK(st.z()[0] == doctest::Approx(0.2).epsilon(1e-14));
    st = advance(coin, st, coin.control_index("b"), Outcome{0});
    CHECK(st.n == 2);
    CHECK(st.z()[0] == doctest::Approx(0.04).epsilon(1e-14));
}

TEST_CASE("quadrature weights are positive and sum to one") {
    auto gauss = fixtures::gaussian_demo(48);
    CHECK(gauss.validate().empty());
}
