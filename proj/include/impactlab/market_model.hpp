// SPDX-License-Identifier: MIT
#pragma once

#include "impactlab/impact_curve.hpp"

#include <optional>
#include <string>
#include <vector>

namespace impactlab {

/// A scalar coefficient of the price diffusion (drift or volatility) with its derivative.
struct Coefficient {
    std::string name;
    ScalarFn value;
    ScalarFn derivative;
    std::optional<double> constant;

    double operator()(double x) const { return value(x); }

    static Coefficient constant_value(double c);
};

struct DiffusionCoefficients {
    Coefficient mu;
    Coefficient sigma;
    double lipschitz_bound = 10.0;
    double sigma_floor = 1e-3;
};

enum class DeliveryKind { zero, constant, general };

/// European claim: cash settlement g0 and number of delivered shares g1.
struct Claim {
    std::string name;
    ScalarFn g0;
    ScalarFn g1;
    DeliveryKind g1_kind = DeliveryKind::zero;
    std::optional<double> constant_delivery;

    static Claim cash(std::string name, ScalarFn g0);
};

struct MarketModel {
    DiffusionCoefficients coefficients;
    ImpactCurve curve;
    Claim claim;
    double horizon = 1.0;

    [[nodiscard]] const PriceBox& box() const noexcept { return curve.box(); }
    [[nodiscard]] const ImpactFunction& impact() const noexcept { return curve.impact(); }
    [[nodiscard]] double mu(double x) const { return coefficients.mu(x); }
    [[nodiscard]] double sigma(double x) const { return coefficients.sigma(x); }

    /// Validates and refuses hard failures (f <= 0, sigma below floor, bad box/horizon).
    static MarketModel create(DiffusionCoefficients coefficients, ImpactCurve curve, Claim claim,
                              double horizon);
};

struct ValidationOptions {
    int samples = 10000;
    double claim_lipschitz_bound = 1e6;
};

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    bool hard = false;
    std::string detail;
    std::optional<double> witness;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    double min_impact = 0.0;
    double max_impact = 0.0;
    double min_sigma = 0.0;
    double mu_lipschitz_estimate = 0.0;
    double sigma_lipschitz_estimate = 0.0;

    [[nodiscard]] bool all_passed() const;
    [[nodiscard]] bool has_hard_failure() const;
    [[nodiscard]] const AssumptionCheck* find(const std::string& name) const;
};

/// Dense-sampling check of the standing assumptions on the model's price box.
[[nodiscard]] ValidationReport validate(const MarketModel& model, const ValidationOptions& opts = {});

}  // namespace impactlab
