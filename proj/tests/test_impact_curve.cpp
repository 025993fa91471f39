// SPDX-License-Identifier: MIT
#include "doctest.h"
#include "support.hpp"

#include "impactlab/errors.hpp"

using namespace impactlab;
using namespace testing_support;

TEST_CASE("constant impact flow and cost are exact") {
    const auto c = wide_curve(ImpactFunction::constant(0.3));
    CHECK(c.flow(1.0, 2.0) == doctest::Approx(1.6).epsilon(1e-15));
    CHECK(c.cost(1.0, 2.0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(c.cost(1.0, -2.0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(c.inverse_flow(1.0, 1.6) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("flow matches the closed form for affine impact") {
    const double alpha = 0.4, beta = 0.2;
    const auto c = wide_curve(affine_impact(alpha, beta));
    for (double x : {-1.0, 0.0, 0.7, 2.0}) {
        for (double y : {-2.0, -0.3, 0.5, 1.7}) {
            const double exact = (x + alpha / beta) * std::exp(beta * y) - alpha / beta;
            CHECK(std::abs(c.flow(x, y) - exact) < 1e-10);
            // I(x,z) = (beta x + alpha) [ z e^{beta z} / beta - (e^{beta z} - 1) / beta^2 ]
            const double e = std::exp(beta * y);
            const double cost = (beta * x + alpha) * (y * e / beta - (e - 1.0) / (beta * beta));
            CHECK(std::abs(c.cost(x, y) - cost) < 1e-10);
        }
    }
}

TEST_CASE("flow agrees with a fine-step reference integrator") {
    const auto fn = sinusoidal_impact();
    const auto c = wide_curve(fn);
    for (double x : {-3.0, 0.0, 1.3}) {
        for (double y : {-1.5, 0.2, 2.5}) {
            CHECK(std::abs(c.flow(x, y) - reference_flow(fn.f, x, y)) < 1e-6);
            CHECK(c.flow_error_estimate(x, y) < 1e-6);
        }
    }
}

TEST_CASE("cost agrees with an independent quadrature of s f(x(x,s))") {
    const auto fn = sinusoidal_impact(0.5, 0.2, 2.0);
    const auto c = wide_curve(fn);
    const double x = 0.4, z = 1.3;
    // composite trapezoid with Richardson, on an independently integrated path
    auto trap = [&](int n) {
        double sum = 0.0, prev = x;
        const double h = z / n;
        double gprev = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double xi = reference_flow(fn.f, prev, h, 1e-5);
            const double g = i * h * fn.f(xi);
            sum += 0.5 * h * (gprev + g);
            gprev = g;
            prev = xi;
        }
        return sum;
    };
    const double t1 = trap(400), t2 = trap(800);
    const double reference = (4.0 * t2 - t1) / 3.0;
    CHECK(std::abs(c.cost(x, z) - reference) < 1e-8);
}

TEST_CASE("semigroup and reversibility") {
    const auto c = wide_curve(sinusoidal_impact());
    CHECK(std::abs(c.flow(c.flow(0.3, 0.8), 0.5) - c.flow(0.3, 1.3)) < 1e-10);
    CHECK(std::abs(c.flow(c.flow(0.3, 0.8), -0.8) - 0.3) < 1e-10);
    CHECK(c.flow(0.3, 0.0) == 0.3);
    CHECK(c.cost(0.3, 0.0) == 0.0);
}

TEST_CASE("flow is increasing in size and cost is nonnegative") {
    const auto c = wide_curve(sinusoidal_impact());
    double prev = c.flow(0.1, -2.0);
    for (double y = -1.9; y <= 2.0; y += 0.1) {
        const double cur = c.flow(0.1, y);
        CHECK(cur > prev);
        CHECK(c.cost(0.1, y) >= 0.0);
        prev = cur;
    }
}

TEST_CASE("inverse flow recovers the size") {
    const auto c = wide_curve(sinusoidal_impact());
    for (double y : {-2.0, -0.01, 0.4, 3.0}) {
        const double target = c.flow(1.0, y);
        const double inv = c.inverse_flow(1.0, target);
        CHECK(std::abs(c.flow(1.0, inv) - target) <= 1e-10);
        CHECK(std::abs(inv - y) < 1e-8);
    }
    const auto warm = c.inverse_flow_from(1.0, c.flow(1.0, 0.5), FlowPoint{0.45, c.flow(1.0, 0.45)});
    CHECK(std::abs(warm.shares - 0.5) < 1e-8);
}

TEST_CASE("closed-form x-derivatives agree with finite differences") {
    const auto c = wide_curve(sinusoidal_impact(0.4, 0.15, 1.5));
    const double y = 0.9;
    for (double x : {-1.0, 0.2, 1.1}) {
        auto X = [&](double u) { return c.flow(u, y); };
        auto dX = [&](double u) { return c.dflow_dx(u, c.flow(u, y)); };
        auto I = [&](double u) { return c.cost(u, y); };
        auto dI = [&](double u) { return c.dcost_dx(u, y, c.flow(u, y)); };
        const double end = c.flow(x, y);
        CHECK(std::abs(c.dflow_dx(x, end) - d1(X, x, 1e-3)) < 1e-8);
        CHECK(std::abs(c.d2flow_dxx(x, end) - d1(dX, x, 1e-3)) < 1e-8);
        CHECK(std::abs(c.dcost_dx(x, y, end) - d1(I, x, 1e-3)) < 1e-8);
        CHECK(std::abs(c.d2cost_dxx(x, y, end) - d1(dI, x, 1e-3)) < 1e-8);
    }
}

TEST_CASE("jump map") {
    const auto c = wide_curve(sinusoidal_impact());
    const MarketState s{0.5, 2.0, 1.0};
    const auto t = c.round_trip_state(s, 0.7);
    const double end = c.flow(0.5, 0.7);
    CHECK(t.price == doctest::Approx(end).epsilon(1e-15));
    CHECK(t.shares == doctest::Approx(2.7));
    CHECK(t.value == doctest::Approx(1.0 + 2.0 * (end - 0.5) + c.cost(0.5, 0.7)).epsilon(1e-14));
    const auto back = c.round_trip_state(t, -0.7);
    CHECK(std::abs(back.price - s.price) < 1e-10);
    CHECK(back.shares == doctest::Approx(s.shares));
}

TEST_CASE("leaving the price box raises a domain error") {
    const auto c = ImpactCurve(ImpactFunction::constant(1.0), PriceBox{-1.0, 1.0});
    CHECK_THROWS_AS((void)c.flow(0.5, 1.0), DomainEscapeError);
    CHECK_THROWS_AS((void)c.flow(2.0, 0.0), DomainEscapeError);
    const auto s = ImpactCurve(sinusoidal_impact(), PriceBox{-1.0, 1.0});
    CHECK_THROWS_AS((void)s.cost(0.5, 5.0), DomainEscapeError);
}

TEST_CASE("invalid curve options are rejected") {
    CHECK_THROWS_AS(ImpactCurve(ImpactFunction::constant(1.0), PriceBox{1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(ImpactCurve(ImpactFunction::constant(1.0), PriceBox{0, 1}, CurveOptions{0.0}),
                    InvalidArgument);
}
