// SPDX-License-Identifier: MIT
#include "doctest.h"
#include "support.hpp"

#include "impactlab/errors.hpp"
#include "impactlab/hedging_engine.hpp"

#include <sstream>

using namespace impactlab;
using namespace testing_support;

namespace {

MarketModel make(ImpactFunction f, double sigma, Claim claim, double mu = 0.0, double lo = -12.0,
                 double hi = 12.0) {
    DiffusionCoefficients c{Coefficient::constant_value(mu), Coefficient::constant_value(sigma)};
    ImpactCurve curve(std::move(f), PriceBox{lo, hi});
    if (sigma == 0.0) return MarketModel{c, curve, std::move(claim), 1.0};
    return MarketModel::create(c, curve, std::move(claim), 1.0);
}

Claim cosine() { return Claim::cash("cos", [](double x) { return std::cos(x); }); }

}  // namespace

TEST_CASE("fixed impact controls reduce to a = sigma w_xx and b = 0 for the heat solution") {
    const double lambda = 0.3, sigma = 0.2;
    const auto m = make(ImpactFunction::constant(lambda), sigma, cosine());
    const auto sol = solve(m, PdeGrid{-8.0, 8.0, 512, 512, 1.0});
    const SolutionDerivatives d(sol);
    for (double t : {0.0, 0.3, 0.9}) {
        for (double xh : {-1.0, 0.2, 1.4}) {
            const double decay = std::exp(-0.5 * sigma * sigma * (1.0 - t));
            const double Y = -decay * std::sin(xh);  // delta at the liquidation price
            const double X = xh + lambda * Y;
            const auto c = build_feedback_controls(d, m, t, X, Y);
            CHECK(c.x_hat == doctest::Approx(xh).epsilon(1e-14));
            CHECK(std::abs(c.a - sigma * (-decay * std::cos(xh))) < 1e-4);
            CHECK(std::abs(c.b) < 1e-3);
        }
    }
}

TEST_CASE("affine claim under constant impact needs no rebalancing") {
    const auto m = make(ImpactFunction::constant(0.3), 0.2,
                        Claim::cash("affine", [](double x) { return 1.0 + 0.5 * x; }));
    const auto sol = solve(m, PdeGrid{-6.0, 6.0, 64, 32, 1.0});
    const SolutionDerivatives d(sol);
    const auto c = build_feedback_controls(d, m, 0.5, 0.3, 0.5);
    CHECK(std::abs(c.a) < 1e-10);
    CHECK(std::abs(c.b) < 1e-10);
    HedgeRun run;
    run.x0 = 0.0;
    run.steps = 64;
    run.mc_paths = 20;
    const auto rep = run_hedge(m, sol, run);
    CHECK(rep.opening_shares == doctest::Approx(0.5));
    CHECK(rep.max_abs_error < 1e-10);
}

TEST_CASE("hedging cos under fixed impact replicates and the costs cancel") {
    const auto m = make(ImpactFunction::constant(0.3), 0.2, cosine());
    const auto sol = solve(m, PdeGrid{-8.0, 8.0, 256, 256, 1.0});
    HedgeRun run;
    run.x0 = 0.3;
    run.steps = 256;
    run.mc_paths = 400;
    run.seed = 7;
    const auto rep = run_hedge(m, sol, run);
    CHECK(rep.rms_error < 0.01 * rep.rms_target);
    CHECK(!rep.invalid);
    for (const auto& p : rep.paths) {
        CHECK(p.opening_gap < 1e-12);
        CHECK(std::abs(p.unwind_residual) < 1e-12);
        CHECK(p.max_tracking_gap < 1e-2);
    }
    const auto cc = liquidation_cancellation_check(m, rep);
    CHECK(cc.applicable);
    CHECK(cc.max_residual < 1e-10);

    HedgeRun shifted = run;
    shifted.v0 = rep.initial_wealth + 0.25;
    const auto rep2 = run_hedge(m, sol, shifted);
    for (std::size_t i = 0; i < rep.paths.size(); ++i)
        CHECK(std::abs(rep2.paths[i].error - rep.paths[i].error - 0.25) < 1e-12);
}

TEST_CASE("cancellation check is skipped outside constant coefficients") {
    const auto m = make(sinusoidal_impact(), 0.2, cosine());
    const auto sol = solve(m, PdeGrid{-6.0, 6.0, 64, 32, 1.0});
    HedgeRun run;
    run.steps = 32;
    run.mc_paths = 4;
    const auto cc = liquidation_cancellation_check(m, run_hedge(m, sol, run));
    CHECK_FALSE(cc.applicable);
    CHECK(cc.status.rfind("skipped", 0) == 0);
}

TEST_CASE("zero volatility: replication is exact up to the time step") {
    const auto m = make(ImpactFunction::constant(0.3), 0.0, cosine(), 0.2);
    const auto sol = solve(m, PdeGrid{-6.0, 6.0, 256, 16, 1.0});
    std::vector<double> errs;
    for (std::size_t steps : {128u, 256u, 512u}) {
        HedgeRun run;
        run.x0 = 0.4;
        run.steps = steps;
        run.mc_paths = 1;
        errs.push_back(std::abs(run_hedge(m, sol, run).paths[0].error));
    }
    CHECK(errs[2] < 1e-3);
    CHECK(errs[2] < errs[0]);
}

TEST_CASE("varying impact: identities along the hedge and small replication error") {
    const auto m = make(sinusoidal_impact(0.3, 0.1), 0.2, cosine());
    const auto sol = solve(m, PdeGrid{-8.0, 8.0, 256, 256, 1.0});
    HedgeRun run;
    run.x0 = 0.3;
    run.steps = 256;
    run.mc_paths = 100;
    run.traces = 2;
    const auto rep = run_hedge(m, sol, run);
    CHECK(rep.traces.size() == 2);
    CHECK(rep.traces[0].states.size() == 257);
    for (const auto& p : rep.paths) {
        CHECK(p.opening_gap < 1e-9);
        CHECK(std::abs(p.unwind_residual) < 1e-8);
        CHECK(p.max_tracking_gap < 2e-2);
    }
    CHECK(rep.rms_error < 0.02 * rep.rms_target);
    std::ostringstream os;
    write_csv(rep, os);
    CHECK(os.str().rfind("path,error,target,X_T,V_T,stochastic_integral,capped_steps\n", 0) == 0);
    CHECK(summary_json(rep).find("rms_error") != std::string::npos);
}

TEST_CASE("hedge start must be inside the PDE grid and horizon") {
    const auto m = make(ImpactFunction::constant(0.3), 0.2, cosine());
    const auto sol = solve(m, PdeGrid{-3.0, 3.0, 32, 8, 1.0});
    HedgeRun run;
    run.x0 = 5.0;
    CHECK_THROWS_AS((void)run_hedge(m, sol, run), InvalidArgument);
    run.x0 = 0.0;
    run.steps = 10;
    run.noise_steps = 15;
    CHECK_THROWS_AS((void)run_hedge(m, sol, run), InvalidArgument);
}

TEST_CASE("milstein hedge converges at first order or better, euler at one half") {
    DiffusionCoefficients c{Coefficient::constant_value(0.0),
                            Coefficient{"tanh", [](double x) { return 0.2 + 0.05 * std::tanh(x); },
                                        [](double x) {
                                            const double th = std::tanh(x);
                                            return 0.05 * (1.0 - th * th);
                                        },
                                        std::nullopt}};
    const auto m = MarketModel::create(c, ImpactCurve(sinusoidal_impact(0.3, 0.1), PriceBox{-12.0, 12.0}),
                                       cosine(), 1.0);
    HedgeRun run;
    run.x0 = 0.3;
    run.steps = 32;
    run.mc_paths = 200;
    run.seed = 11;
    const PdeGrid base{-6.0, 6.0, 32, 32, 1.0};
    const auto mil = hedge_refinement(m, base, run, 3);
    run.scheme = HedgeScheme::euler;
    const auto eul = hedge_refinement(m, base, run, 3);
    CHECK(mil.observed_order > 1.0);
    CHECK(eul.observed_order < 0.8);
    CHECK(mil.levels.back().rms_error < eul.levels.back().rms_error);
}

TEST_CASE("costs cancel exactly under both time schemes") {
    const auto m = make(ImpactFunction::constant(0.3), 0.2, cosine());
    const auto sol = solve(m, PdeGrid{-8.0, 8.0, 128, 64, 1.0});
    for (auto scheme : {HedgeScheme::euler, HedgeScheme::milstein}) {
        HedgeRun run;
        run.steps = 128;
        run.mc_paths = 50;
        run.scheme = scheme;
        const auto cc = liquidation_cancellation_check(m, run_hedge(m, sol, run));
        CHECK(cc.applicable);
        CHECK(cc.max_residual < 1e-10);
    }
}
