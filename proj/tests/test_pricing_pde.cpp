// SPDX-License-Identifier: MIT
#include "doctest.h"
#include "support.hpp"

#include "impactlab/errors.hpp"
#include "impactlab/pricing_pde.hpp"

#include <sstream>

using namespace impactlab;
using namespace testing_support;

namespace {

MarketModel model_with(ImpactFunction f, Coefficient sigma, Claim claim, double lo = -12.0,
                       double hi = 12.0, double horizon = 1.0) {
    DiffusionCoefficients c{Coefficient::constant_value(0.0), std::move(sigma)};
    return MarketModel::create(c, ImpactCurve(std::move(f), PriceBox{lo, hi}), std::move(claim),
                               horizon);
}

Coefficient tanh_sigma(double base, double amp) {
    return Coefficient{"tanh", [=](double x) { return base + amp * std::tanh(x); },
                       [=](double x) { return amp / (std::cosh(x) * std::cosh(x)); },
                       std::nullopt};
}

Claim cosine_claim() { return Claim::cash("cos", [](double x) { return std::cos(x); }); }

Claim constant_delivery(double q, ScalarFn g0) {
    Claim c;
    c.name = "delivery";
    c.g0 = std::move(g0);
    c.g1 = [q](double) { return q; };
    c.g1_kind = DeliveryKind::constant;
    c.constant_delivery = q;
    return c;
}

Claim logistic_delivery(double q, double strike, double s) {
    Claim c;
    c.name = "digital";
    c.g1 = [=](double x) { return q / (1.0 + std::exp(-(x - strike) / s)); };
    c.g0 = [=](double x) { return -strike * q / (1.0 + std::exp(-(x - strike) / s)); };
    c.g1_kind = DeliveryKind::general;
    return c;
}

}  // namespace

TEST_CASE("hat coefficients for fixed impact and at zero position") {
    const auto m = model_with(ImpactFunction::constant(0.3), tanh_sigma(0.2, 0.05), cosine_claim());
    const auto h = hat_coefficients(m, 0.4, 1.5);
    CHECK(h.mu == 0.0);
    CHECK(h.sigma == doctest::Approx(0.2 + 0.05 * std::tanh(0.4 + 1.5 * 0.3)).epsilon(1e-14));
    const auto s = model_with(sinusoidal_impact(), tanh_sigma(0.2, 0.05), cosine_claim());
    const auto z = hat_coefficients(s, 0.4, 0.0);
    CHECK(z.sigma == doctest::Approx(0.2 + 0.05 * std::tanh(0.4)).epsilon(1e-14));
    CHECK(z.mu == 0.0);
}

TEST_CASE("hat coefficients agree with finite differences through the flow") {
    const auto m = model_with(sinusoidal_impact(0.4, 0.15, 1.3), tanh_sigma(0.2, 0.05), cosine_claim());
    for (double x : {-1.0, 0.3, 2.0}) {
        for (double y : {-0.8, 0.6}) {
            const double X = m.curve.flow(x, y);
            auto back = [&](double z) { return m.curve.flow(z, -y); };
            const double dback = d1(back, X, 1e-3);
            auto dback_fn = [&](double z) { return d1(back, z, 1e-3); };
            const double d2back = d1(dback_fn, X, 1e-3);
            const auto h = hat_coefficients(m, x, y);
            CHECK(std::abs(h.sigma - m.sigma(X) * dback) < 1e-6);
            CHECK(std::abs(h.mu - 0.5 * m.sigma(X) * m.sigma(X) * d2back) < 1e-6);
        }
    }
}

TEST_CASE("terminal condition closed forms") {
    const double lambda = 0.3, q = 0.7;
    const auto m = model_with(ImpactFunction::constant(lambda), Coefficient::constant_value(0.2),
                              constant_delivery(q, [](double x) { return std::sin(x); }));
    const std::vector<double> nodes{-1.0, 0.0, 0.5, 2.0};
    const auto t = terminal_condition(m, nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double x = nodes[i];
        CHECK(t.values[i] == doctest::Approx(q * x + q * q * lambda / 2 + std::sin(x + q * lambda)).epsilon(1e-13));
        CHECK(t.shares[i] == q);
    }
    const auto c = model_with(ImpactFunction::constant(lambda), Coefficient::constant_value(0.2),
                              cosine_claim());
    const auto tc = terminal_condition(c, nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i) CHECK(tc.values[i] == std::cos(nodes[i]));
    TerminalOptions tight;
    tight.k_bound = 0.5;
    CHECK_THROWS_AS((void)terminal_condition(m, nodes, tight), FixedPointError);
}

TEST_CASE("general delivery: fixed points hold and the truncated value decreases in k") {
    const auto m = model_with(sinusoidal_impact(0.3, 0.1), Coefficient::constant_value(0.2),
                              logistic_delivery(1.0, 0.5, 0.2));
    const std::vector<double> nodes{-1.0, 0.0, 0.4, 0.8, 2.0};
    const auto t = terminal_condition(m, nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double y = t.shares[i];
        CHECK(std::abs(y - m.claim.g1(m.curve.flow(nodes[i], y))) < 1e-10);
        CHECK(t.multiplicity[i] >= 1);
    }
    std::vector<double> prev;
    for (double k : {1.0, 2.0, 5.0}) {
        TerminalOptions o;
        o.k_bound = k;
        const auto tk = terminal_condition(m, nodes, o);
        if (!prev.empty())
            for (std::size_t i = 0; i < nodes.size(); ++i) CHECK(tk.values[i] <= prev[i] + 1e-12);
        prev = tk.values;
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) CHECK(std::abs(prev[i] - t.values[i]) < 1e-12);
}

TEST_CASE("fixed impact with constant volatility reduces to the heat equation") {
    const double sigma = 0.2;
    const auto m = model_with(ImpactFunction::constant(0.3), Coefficient::constant_value(sigma),
                              cosine_claim());
    const PdeGrid grid{-8.0, 8.0, 256, 256, 1.0};
    const auto sol = solve(m, grid);
    double err = 0.0;
    for (std::size_t n = 0; n <= 256; n += 32)
        for (std::size_t i = 0; i <= 256; ++i) {
            if (std::abs(sol.x[i]) > 4.0) continue;
            const double exact = std::exp(-0.5 * sigma * sigma * (1.0 - sol.s[n])) * std::cos(sol.x[i]);
            err = std::max(err, std::abs(sol.w(n, i) - exact));
        }
    CHECK(err < 1e-3);
    // delta hedge: y_hat = d_x w under fixed impact
    for (std::size_t i = 1; i < 256; ++i) CHECK(std::abs(sol.y_hat(0, i) - sol.dw_dx(0, i)) < 1e-12);
    CHECK(sol.diagnostics.hedge_map_error < 1e-10);
    for (std::size_t i = 0; i <= 256; ++i) CHECK(sol.w(256, i) == std::cos(sol.x[i]));
}

TEST_CASE("constant payoff stays constant") {
    const auto m = model_with(sinusoidal_impact(), tanh_sigma(0.2, 0.05),
                              Claim::cash("c", [](double) { return 2.5; }));
    const auto sol = solve(m, PdeGrid{-3.0, 3.0, 32, 16, 1.0});
    for (double v : sol.w.data) CHECK(std::abs(v - 2.5) < 1e-12);
}

TEST_CASE("fixed impact with varying volatility satisfies the reduced equation") {
    const double lambda = 0.3;
    const auto m = model_with(ImpactFunction::constant(lambda), tanh_sigma(0.2, 0.08), cosine_claim());
    const auto sol = solve(m, PdeGrid{-8.0, 8.0, 512, 512, 1.0});
    const double h = sol.grid.dx(), dt = sol.grid.dt();
    double res = 0.0;
    for (std::size_t n = 1; n < 512; n += 37)
        for (std::size_t i = 1; i < 512; ++i) {
            if (std::abs(sol.x[i]) > 4.0) continue;
            const double wt = (sol.w(n + 1, i) - sol.w(n - 1, i)) / (2 * dt);
            const double wx = (sol.w(n, i + 1) - sol.w(n, i - 1)) / (2 * h);
            const double wxx = (sol.w(n, i + 1) - 2 * sol.w(n, i) + sol.w(n, i - 1)) / (h * h);
            const double s = m.sigma(sol.x[i] + lambda * wx);
            res = std::max(res, std::abs(wt + 0.5 * s * s * wxx));
        }
    CHECK(res < 1e-3);
}

TEST_CASE("transformed solver agrees with the direct solver") {
    const auto fixed = model_with(ImpactFunction::constant(0.3), Coefficient::constant_value(0.2),
                                  cosine_claim());
    const PdeGrid grid{-6.0, 6.0, 128, 128, 1.0};
    // Without discounting the transformed scheme is the direct one in rescaled coordinates.
    PdeOptions undiscounted;
    undiscounted.rho = 0.0;
    const auto a = solve(fixed, grid);
    const auto b = solve_transformed(fixed, grid, undiscounted);
    CHECK(max_difference(a, b, -5.0, 5.0) < 1e-12);
    const auto b1 = solve_transformed(fixed, grid);
    const auto b2 = solve_transformed(fixed, grid.refined(2));
    CHECK(max_difference(a, b1, -3.0, 3.0) < 3.0 * max_difference(b1, b2, -3.0, 3.0));

    const auto varying = model_with(sinusoidal_impact(0.3, 0.1), tanh_sigma(0.2, 0.05), cosine_claim());
    const auto c = solve(varying, grid);
    const auto d = solve_transformed(varying, grid);
    const auto c2 = solve(varying, grid.refined(2));
    const auto d2 = solve_transformed(varying, grid.refined(2));
    const double est = std::max(max_difference(c, c2, -3.0, 3.0), max_difference(d, d2, -3.0, 3.0));
    CHECK(max_difference(c2, d2, -3.0, 3.0) < 3.0 * est);
    CHECK(max_difference(c, d, -3.0, 3.0) < 1e-2);
}

TEST_CASE("comparison: ordered payoffs give ordered solutions") {
    const auto f = sinusoidal_impact(0.3, 0.1);
    const auto lo = model_with(f, tanh_sigma(0.2, 0.05), cosine_claim());
    const auto hi = model_with(f, tanh_sigma(0.2, 0.05),
                               Claim::cash("cos+", [](double x) { return std::cos(x) + 0.1 * std::exp(-x * x); }));
    const PdeGrid grid{-6.0, 6.0, 128, 64, 1.0};
    const auto a = solve(lo, grid), b = solve(hi, grid);
    for (std::size_t k = 0; k < a.w.data.size(); ++k) CHECK(a.w.data[k] <= b.w.data[k] + 1e-8);
}

TEST_CASE("picard iteration limit raises a convergence error") {
    const auto m = model_with(sinusoidal_impact(0.3, 0.1), tanh_sigma(0.2, 0.05), cosine_claim());
    PdeOptions o;
    o.max_picard = 1;
    o.picard_tol = 1e-300;
    CHECK_THROWS_AS((void)solve(m, PdeGrid{-3.0, 3.0, 32, 8, 1.0}, o), ConvergenceError);
}

TEST_CASE("grid must sit inside the price box") {
    const auto m = model_with(ImpactFunction::constant(0.3), Coefficient::constant_value(0.2),
                              cosine_claim(), -2.0, 2.0);
    CHECK_THROWS_AS((void)solve(m, PdeGrid{-3.0, 3.0, 32, 8, 1.0}), InvalidArgument);
}

TEST_CASE("solution csv and diagnostics") {
    const auto m = model_with(ImpactFunction::constant(0.3), Coefficient::constant_value(0.2),
                              cosine_claim());
    const auto sol = solve(m, PdeGrid{-3.0, 3.0, 8, 4, 1.0});
    std::ostringstream os;
    write_csv(sol, os);
    const auto text = os.str();
    CHECK(text.rfind("s,x,w,dw_dx,y_hat\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 5 * 9);
    CHECK(diagnostics_json(sol).find("picard_iterations") != std::string::npos);
}
