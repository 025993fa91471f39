// SPDX-License-Identifier: MIT
#include "impactlab/impact_curve.hpp"

#include "impactlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace impactlab {

DomainEscapeError::DomainEscapeError(const std::string& where, double value, double lo,
                                     double hi)
    : NumericalError([&] {
          std::ostringstream os;
          os.precision(17);
          os << where << ": value " << value << " left the price box [" << lo << ", " << hi
             << "]";
          return os.str();
      }()),
      value_(value) {}

ImpactFunction ImpactFunction::constant(double lambda) {
    ImpactFunction fn;
    fn.name = "constant";
    fn.f = [lambda](double) { return lambda; };
    fn.df = [](double) { return 0.0; };
    fn.d2f = [](double) { return 0.0; };
    fn.constant_slope = lambda;
    if (lambda > 0.0) fn.declared_lower_bound = lambda;
    return fn;
}

ImpactFunction ImpactFunction::from(std::string name, ScalarFn f, ScalarFn df, ScalarFn d2f) {
    constexpr double h = 1e-5;
    ImpactFunction fn;
    fn.name = std::move(name);
    fn.f = std::move(f);
    if (!df || !d2f) fn.analytic_derivatives = false;
    if (df) {
        fn.df = std::move(df);
    } else {
        fn.df = [g = fn.f](double x) { return (g(x + h) - g(x - h)) / (2.0 * h); };
    }
    if (d2f) {
        fn.d2f = std::move(d2f);
    } else {
        fn.d2f = [g = fn.f](double x) { return (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h); };
    }
    return fn;
}

ImpactCurve::ImpactCurve(ImpactFunction impact, PriceBox box, CurveOptions options)
    : impact_(std::move(impact)), box_(box), options_(options) {
    if (!(options_.ode_step > 0.0)) throw InvalidArgument("ode_step must be positive");
    if (!(options_.newton_tol > 0.0)) throw InvalidArgument("newton_tol must be positive");
    if (options_.max_newton_iter < 1) throw InvalidArgument("max_newton_iter must be >= 1");
    if (!(box_.hi > box_.lo)) throw InvalidArgument("price box must be nondegenerate");
    if (!impact_.f || !impact_.df || !impact_.d2f)
        throw InvalidArgument("impact function must provide f, f' and f''");
}

void ImpactCurve::check_box(const char* where, double x) const {
    if (!box_.contains(x)) throw DomainEscapeError(where, x, box_.lo, box_.hi);
}

double ImpactCurve::integrate(double x, double delta, double step) const {
    check_box("impact flow", x);
    if (delta == 0.0) return x;
    if (impact_.constant_slope) {
        const double end = x + *impact_.constant_slope * delta;
        check_box("impact flow", end);
        return end;
    }
    const auto n = static_cast<long>(std::max(1.0, std::ceil(std::abs(delta) / step)));
    const double h = delta / static_cast<double>(n);
    const auto& f = impact_.f;
    double y = x;
    for (long i = 0; i < n; ++i) {
        const double k1 = f(y);
        const double k2 = f(y + 0.5 * h * k1);
        const double k3 = f(y + 0.5 * h * k2);
        const double k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_box("impact flow", y);
    }
    return y;
}

double ImpactCurve::flow(double x, double delta) const {
    return integrate(x, delta, options_.ode_step);
}

double ImpactCurve::flow_error_estimate(double x, double delta) const {
    const double coarse = integrate(x, delta, options_.ode_step);
    const double fine = integrate(x, delta, 0.5 * options_.ode_step);
    return std::abs(coarse - fine) / 15.0;
}

FlowAndCost ImpactCurve::flow_and_cost(double x, double delta) const {
    check_box("impact cost", x);
    if (delta == 0.0) return {x, 0.0};
    if (impact_.constant_slope) {
        const double lambda = *impact_.constant_slope;
        const double end = x + lambda * delta;
        check_box("impact cost", end);
        return {end, 0.5 * lambda * delta * delta};
    }
    // Simpson needs an even number of intervals; the flow nodes double as quadrature nodes.
    auto n = static_cast<long>(std::max(2.0, std::ceil(std::abs(delta) / options_.ode_step)));
    if (n % 2 != 0) ++n;
    const double h = delta / static_cast<double>(n);
    const auto& f = impact_.f;
    double y = x;
    double fy = f(y);
    double odd = 0.0;
    double even = 0.0;
    for (long i = 1; i <= n; ++i) {
        const double k1 = fy;
        const double k2 = f(y + 0.5 * h * k1);
        const double k3 = f(y + 0.5 * h * k2);
        const double k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_box("impact cost", y);
        fy = f(y);
        const double g = static_cast<double>(i) * h * fy;
        if (i == n) break;
        if (i % 2 == 1) {
            odd += g;
        } else {
            even += g;
        }
    }
    const double last = delta * fy;
    const double cost = h / 3.0 * (4.0 * odd + 2.0 * even + last);
    return {y, cost};
}

bool ImpactCurve::clipped_flow(double x, double delta, double& end) const {
    try {
        end = flow(x, delta);
        return true;
    } catch (const DomainEscapeError&) {
        return false;
    }
}

FlowPoint ImpactCurve::inverse_flow_from(double x, double target, FlowPoint start) const {
    check_box("inverse flow target", target);
    const double tol = options_.newton_tol;
    FlowPoint cur = start;
    if (std::abs(cur.price - target) <= tol) return cur;

    for (int it = 0; it < options_.max_newton_iter; ++it) {
        double step = (target - cur.price) / impact_.f(cur.price);
        FlowPoint next{0.0, 0.0};
        // Damp steps that would carry the iterate out of the box.
        int halvings = 0;
        while (!clipped_flow(cur.price, step, next.price) && halvings < 60) {
            step *= 0.5;
            ++halvings;
        }
        if (halvings == 60) break;
        next.shares = cur.shares + step;
        const bool improved = std::abs(next.price - target) < std::abs(cur.price - target);
        cur = next;
        if (std::abs(cur.price - target) <= tol) return cur;
        if (!improved) break;
    }

    // Bisection on the increasing map y -> x(x, y), bracketed around the current iterate.
    double lo = cur.shares;
    double hi = cur.shares;
    double width = std::max(std::abs(target - cur.price) / impact_.f(cur.price), 1e-12);
    double flo = cur.price;
    double fhi = cur.price;
    for (int k = 0; k < 200 && !(flo <= target && fhi >= target); ++k) {
        if (flo > target) {
            double w = width;
            double trial = 0.0;
            while (!clipped_flow(x, lo - w, trial) && w > 1e-300) w *= 0.5;
            lo -= w;
            flo = trial;
        }
        if (fhi < target) {
            double w = width;
            double trial = 0.0;
            while (!clipped_flow(x, hi + w, trial) && w > 1e-300) w *= 0.5;
            hi += w;
            fhi = trial;
        }
        width *= 2.0;
    }
    if (!(flo <= target && fhi >= target))
        throw ConvergenceError("inverse flow: could not bracket the target");
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = flow(x, mid);
        if (std::abs(fm - target) <= tol) return {mid, fm};
        if (fm < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 0.0 || mid == lo || mid == hi) break;
    }
    throw ConvergenceError("inverse flow: no convergence within max iterations");
}

double ImpactCurve::inverse_flow(double x, double target) const {
    check_box("inverse flow", x);
    if (target == x) return 0.0;
    if (impact_.constant_slope) {
        check_box("inverse flow target", target);
        return (target - x) / *impact_.constant_slope;
    }
    check_box("inverse flow target", target);
    double guess = (target - x) / impact_.f(x);
    double end = 0.0;
    while (!clipped_flow(x, guess, end)) guess *= 0.5;
    return inverse_flow_from(x, target, FlowPoint{guess, end}).shares;
}

MarketState ImpactCurve::round_trip_state(const MarketState& s, double delta) const {
    if (delta == 0.0) return s;
    const auto [end, cost] = flow_and_cost(s.price, delta);
    return MarketState{end, s.shares + delta, s.value + s.shares * (end - s.price) + cost};
}

double ImpactCurve::dflow_dx(double x, double end) const {
    return impact_.f(end) / impact_.f(x);
}

double ImpactCurve::d2flow_dxx(double x, double end) const {
    const double fx = impact_.f(x);
    return impact_.f(end) * (impact_.df(end) - impact_.df(x)) / (fx * fx);
}

double ImpactCurve::dcost_dx(double x, double y, double end) const {
    return (y * impact_.f(end) - (end - x)) / impact_.f(x);
}

double ImpactCurve::d2cost_dxx(double x, double y, double end) const {
    const double fx = impact_.f(x);
    const double fe = impact_.f(end);
    const double ratio = fe / fx;
    const double first = (y * impact_.df(end) * ratio - ratio + 1.0) / fx;
    const double second = (y * fe - (end - x)) * impact_.df(x) / (fx * fx);
    return first - second;
}

}  // namespace impactlab
