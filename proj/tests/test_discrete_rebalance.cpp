// SPDX-License-Identifier: MIT
#include "doctest.h"
#include "support.hpp"

#include "impactlab/discrete_rebalance.hpp"
#include "impactlab/errors.hpp"
#include "impactlab/rng.hpp"

using namespace impactlab;
using namespace testing_support;

namespace {

MarketModel sinusoidal_model() {
    DiffusionCoefficients c{Coefficient::constant_value(0.02), Coefficient::constant_value(0.2)};
    return MarketModel::create(c, wide_curve(sinusoidal_impact(0.3, 0.1)),
                               Claim::cash("zero", [](double) { return 0.0; }), 1.0);
}

}  // namespace

TEST_CASE("constant signal: discrete and continuous paths coincide") {
    const auto model = constant_model(0.3, 0.2);
    const auto grid = TimeGrid::uniform(0.0, 1.0, 64);
    const auto sig = TradingSignal::constant(0.7, 0.0, 0.0);
    const auto dw = brownian_increments(1, 0, 64, grid.dt());
    const auto cont = simulate_continuous(model, sig, grid, {1.0, 0.0}, dw);
    for (std::size_t n : {1u, 4u, 64u}) {
        const auto disc = simulate_discrete(model, sig, grid, n, {1.0, 0.0}, dw);
        CHECK(disc.jumps.empty());
        for (std::size_t k = 0; k <= 64; ++k) {
            CHECK(disc.states[k].price == doctest::Approx(cont.states[k].price).epsilon(1e-14));
            CHECK(disc.states[k].value == doctest::Approx(cont.states[k].value).epsilon(1e-14));
        }
    }
}

TEST_CASE("single rebalance with constant impact") {
    const auto model = constant_model(0.3, 0.0);
    const auto grid = TimeGrid::uniform(0.0, 1.0, 4);
    const auto sig = TradingSignal::constant(0.0, 0.0, 2.0);
    const auto disc = simulate_discrete(model, sig, grid, 1, {1.0, 0.0}, std::vector<double>(4, 0.0));
    REQUIRE(disc.jumps.size() == 1);
    CHECK(disc.jumps[0].shares == doctest::Approx(2.0));
    CHECK(disc.terminal().price == doctest::Approx(1.0 + 0.3 * 2.0));
    CHECK(disc.terminal().value == doctest::Approx(0.5 * 4.0 * 0.3));
}

TEST_CASE("discrete path agrees with a direct transcription of the expanded wealth formula") {
    const auto model = sinusoidal_model();
    const auto grid = TimeGrid::uniform(0.0, 1.0, 128);
    const auto sig = TradingSignal::constant(0.2, 0.5, 0.3);
    const auto dw = brownian_increments(9, 2, 128, grid.dt());
    const std::size_t n = 16, stride = 8;
    const auto disc = simulate_discrete(model, sig, grid, n, {0.5, 1.0}, dw);

    // Signal, then price: diffusion between dates, jump delta f(X-) at each date.
    std::vector<double> y(129);
    y[0] = 0.2;
    for (int k = 0; k < 128; ++k) y[k + 1] = y[k] + (0.3 * grid.dt() + 0.5 * dw[k]);
    const auto& f = model.impact().f;
    double x = 0.5, v = 1.0, x_start = 0.5;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t k = (i - 1) * stride; k < i * stride; ++k) x = x + (0.02 * grid.dt() + 0.2 * dw[k]);
        const double held = y[(i - 1) * stride];
        const double delta = y[i * stride] - held;
        const double fx = f(x);
        v = v + held * (x - x_start) + 0.5 * delta * delta * fx + held * delta * fx;
        x = x + delta * fx;
        x_start = x;
        const auto& s = disc.states[i * stride];
        CHECK(std::abs(s.price - x) < 1e-12);
        CHECK(std::abs(s.value - v) < 1e-12);
        CHECK(s.shares == y[i * stride]);
    }
}

TEST_CASE("rebalancing count must divide the grid") {
    const auto model = constant_model(0.3, 0.2);
    const auto grid = TimeGrid::uniform(0.0, 1.0, 10);
    CHECK_THROWS_AS((void)simulate_discrete(model, TradingSignal::constant(0, 0.1, 0), grid, 3, {},
                                            std::vector<double>(10)),
                    InvalidArgument);
    DiscreteRunConfig cfg;
    cfg.n = 3;
    cfg.base_grid_steps = 10;
    CHECK_THROWS_AS(cfg.check(), InvalidArgument);
}

TEST_CASE("convergence study: constant signal has zero error, random signal converges") {
    const auto model = constant_model(0.3, 0.2);
    DiscreteRunConfig cfg;
    cfg.mc_paths = 400;
    cfg.base_grid_steps = 256;
    cfg.seed = 4;
    cfg.threads = 1;
    const std::vector<std::size_t> ns{4, 8, 16, 32};
    const auto flat = convergence_study(model, TradingSignal::constant(1.0, 0, 0), ns, cfg);
    for (const auto& r : flat.rows) CHECK(r.mse < 1e-20);

    const auto t = convergence_study(model, TradingSignal::constant(0.0, 0.5, 0.0), ns, cfg);
    REQUIRE(t.rows.size() == 4);
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].mse < t.rows[i - 1].mse);
    CHECK(t.fit.slope < -0.6);
    CHECK(t.fit.slope > -1.4);
    for (const auto& r : t.rows) CHECK(r.std_err > 0.0);
}

TEST_CASE("convergence study is independent of the worker count") {
    const auto model = constant_model(0.3, 0.2);
    DiscreteRunConfig cfg;
    cfg.mc_paths = 60;
    cfg.base_grid_steps = 64;
    const std::vector<std::size_t> ns{4, 8};
    cfg.threads = 1;
    const auto a = convergence_study(model, TradingSignal::constant(0.0, 0.5, 0.0), ns, cfg);
    cfg.threads = 3;
    const auto b = convergence_study(model, TradingSignal::constant(0.0, 0.5, 0.0), ns, cfg);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.rows[i].mse == b.rows[i].mse);
        CHECK(a.rows[i].std_err == b.rows[i].std_err);
    }
}

TEST_CASE("quadrupling the paths roughly halves the standard error") {
    const auto model = constant_model(0.3, 0.2);
    DiscreteRunConfig cfg;
    cfg.base_grid_steps = 64;
    cfg.threads = 1;
    const std::vector<std::size_t> ns{8};
    cfg.mc_paths = 400;
    const auto small = convergence_study(model, TradingSignal::constant(0, 0.5, 0), ns, cfg);
    cfg.mc_paths = 1600;
    const auto large = convergence_study(model, TradingSignal::constant(0, 0.5, 0), ns, cfg);
    const double ratio = small.rows[0].std_err / large.rows[0].std_err;
    CHECK(ratio > 1.2);
    CHECK(ratio < 3.5);
}
