// SPDX-License-Identifier: MIT
#pragma once

#include "impactlab/impact_curve.hpp"
#include "impactlab/market_model.hpp"

#include <cmath>
#include <random>

namespace testing_support {

using namespace impactlab;

inline ImpactFunction sinusoidal_impact(double base = 0.3, double amp = 0.1, double freq = 1.0) {
    return ImpactFunction::from(
        "sinusoidal", [=](double x) { return base + amp * std::sin(freq * x); },
        [=](double x) { return amp * freq * std::cos(freq * x); },
        [=](double x) { return -amp * freq * freq * std::sin(freq * x); });
}

// f(x) = alpha + beta x, with the exact flow (x + alpha/beta) e^{beta y} - alpha/beta.
inline ImpactFunction affine_impact(double alpha, double beta) {
    return ImpactFunction::from(
        "affine", [=](double x) { return alpha + beta * x; }, [=](double) { return beta; },
        [](double) { return 0.0; });
}

inline ImpactCurve wide_curve(ImpactFunction f, double lo = -50.0, double hi = 50.0) {
    return ImpactCurve(std::move(f), PriceBox{lo, hi});
}

// sigma == 0 is outside the standing assumptions, so the model is assembled without validation.
inline MarketModel constant_model(double lambda, double sigma, double mu = 0.0,
                                  double horizon = 1.0, double lo = -50.0, double hi = 50.0) {
    DiffusionCoefficients c{Coefficient::constant_value(mu), Coefficient::constant_value(sigma)};
    ImpactCurve curve(ImpactFunction::constant(lambda), PriceBox{lo, hi});
    Claim zero = Claim::cash("zero", [](double) { return 0.0; });
    if (sigma == 0.0) return MarketModel{c, curve, zero, horizon};
    return MarketModel::create(c, curve, zero, horizon);
}

// Independent RK4 with a tiny fixed step.
inline double reference_flow(const ScalarFn& f, double x, double y, double h = 1e-5) {
    const auto n = static_cast<long>(std::max(1.0, std::ceil(std::abs(y) / h)));
    const double s = y / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
        const double k1 = f(x), k2 = f(x + 0.5 * s * k1), k3 = f(x + 0.5 * s * k2),
                     k4 = f(x + s * k3);
        x += s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x;
}

// Fourth-order central difference.
template <typename F>
double d1(F&& g, double x, double h) {
    return (8.0 * (g(x + h) - g(x - h)) - (g(x + 2 * h) - g(x - 2 * h))) / (12.0 * h);
}

}  // namespace testing_support
