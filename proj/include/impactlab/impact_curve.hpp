// SPDX-License-Identifier: MIT
//
// Permanent-impact curve: the price reached by feeding an order of total
// size delta infinitesimally, x' = f(x) in the size variable, together with
// the liquidity cost accumulated along the way and the inverse map.
#pragma once

#include "impactlab/state.hpp"

#include <functional>
#include <optional>
#include <string>

namespace impactlab {

using ScalarFn = std::function<double(double)>;

/// Closed price interval in which every evaluation must stay.
struct PriceBox {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool contains(double x) const noexcept { return x >= lo && x <= hi; }
    [[nodiscard]] double width() const noexcept { return hi - lo; }
};

/// Impact slope f (currency per share) with its first two derivatives.
struct ImpactFunction {
    std::string name;
    ScalarFn f;
    ScalarFn df;
    ScalarFn d2f;
    /// False when df/d2f were filled in by central differences.
    bool analytic_derivatives = true;
    /// Set for f == lambda; enables the exact affine flow.
    std::optional<double> constant_slope;
    /// Declared strictly positive lower bound for f, when the model claims inf f > 0.
    std::optional<double> declared_lower_bound;

    static ImpactFunction constant(double lambda);

    /// Builds an impact function; missing derivatives use central differences with step 1e-5.
    static ImpactFunction from(std::string name, ScalarFn f, ScalarFn df = {}, ScalarFn d2f = {});
};

struct CurveOptions {
    double ode_step = 1e-3;    // shares
    double newton_tol = 1e-10; // price units
    int max_newton_iter = 100;
};

/// A point on the curve y -> x(x0, y) used to warm-start inverse solves.
struct FlowPoint {
    double shares = 0.0;
    double price = 0.0;
};

struct FlowAndCost {
    double price = 0.0;
    double cost = 0.0;
};

/// Immutable after construction; every method is a pure function of its inputs.
class ImpactCurve {
public:
    ImpactCurve(ImpactFunction impact, PriceBox box, CurveOptions options = {});

    [[nodiscard]] const ImpactFunction& impact() const noexcept { return impact_; }
    [[nodiscard]] const PriceBox& box() const noexcept { return box_; }
    [[nodiscard]] const CurveOptions& options() const noexcept { return options_; }

    [[nodiscard]] double slope(double x) const { return impact_.f(x); }
    [[nodiscard]] double slope_prime(double x) const { return impact_.df(x); }
    [[nodiscard]] double slope_second(double x) const { return impact_.d2f(x); }

    /// x(x, delta): classical RK4 in the size variable with step ode_step.
    [[nodiscard]] double flow(double x, double delta) const;
    /// Same integration with step ode_step/2; |difference|/15 estimates the RK4 error.
    [[nodiscard]] double flow_error_estimate(double x, double delta) const;

    /// x(x, delta) - x.
    [[nodiscard]] double delta_x(double x, double delta) const { return flow(x, delta) - x; }

    /// Liquidity cost I(x, z) = int_0^z s f(x(x, s)) ds (Simpson on the flow nodes).
    [[nodiscard]] double cost(double x, double z) const { return flow_and_cost(x, z).cost; }

    /// Flow and cost computed in one pass.
    [[nodiscard]] FlowAndCost flow_and_cost(double x, double delta) const;

    /// y with |x(x, y) - target| <= newton_tol.
    [[nodiscard]] double inverse_flow(double x, double target) const;
    /// Newton started from a known point on the curve through x.
    [[nodiscard]] FlowPoint inverse_flow_from(double x, double target, FlowPoint start) const;

    /// Jump map (x, y, v) -> (x(x,d), y + d, v + y*dx(x,d) + I(x,d)).
    [[nodiscard]] MarketState round_trip_state(const MarketState& s, double delta) const;

    // Closed-form partial derivatives along the curve, from f(x) d_x x(x,y) = f(x(x,y))
    // and f(x) d_x I(x,y) + dx(x,y) = y f(x(x,y)). `end` is x(x, y).
    [[nodiscard]] double dflow_dx(double x, double end) const;
    [[nodiscard]] double d2flow_dxx(double x, double end) const;
    [[nodiscard]] double dcost_dx(double x, double y, double end) const;
    [[nodiscard]] double d2cost_dxx(double x, double y, double end) const;

private:
    double integrate(double x, double delta, double step) const;
    // flow(x, delta) into `end`; false instead of throwing when the box is left.
    bool clipped_flow(double x, double delta, double& end) const;
    void check_box(const char* where, double x) const;

    ImpactFunction impact_;
    PriceBox box_;
    CurveOptions options_;
};

}  // namespace impactlab
