// SPDX-License-Identifier: MIT
#include "impactlab/market_model.hpp"

#include "impactlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace impactlab {

Coefficient Coefficient::constant_value(double c) {
    return Coefficient{"constant", [c](double) { return c; }, [](double) { return 0.0; }, c};
}

Claim Claim::cash(std::string name, ScalarFn g0) {
    return Claim{std::move(name), std::move(g0), [](double) { return 0.0; }, DeliveryKind::zero,
                 std::nullopt};
}

bool ValidationReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

bool ValidationReport::has_hard_failure() const {
    return std::any_of(checks.begin(), checks.end(),
                       [](const auto& c) { return c.hard && !c.passed; });
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

struct SampleScan {
    double min = 0.0;
    double max = 0.0;
    double argmin = 0.0;
    bool finite = true;
    double first_nonfinite = 0.0;
    double max_quotient = 0.0;
    double argmax_quotient = 0.0;
};

SampleScan scan(const ScalarFn& fn, const std::vector<double>& xs) {
    SampleScan s;
    s.min = INFINITY;
    s.max = -INFINITY;
    double prev = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double v = fn(xs[i]);
        if (!std::isfinite(v)) {
            if (s.finite) s.first_nonfinite = xs[i];
            s.finite = false;
            continue;
        }
        if (v < s.min) {
            s.min = v;
            s.argmin = xs[i];
        }
        s.max = std::max(s.max, v);
        if (i > 0 && std::isfinite(prev)) {
            const double q = std::abs(v - prev) / (xs[i] - xs[i - 1]);
            if (q > s.max_quotient) {
                s.max_quotient = q;
                s.argmax_quotient = xs[i];
            }
        }
        prev = v;
    }
    return s;
}

}  // namespace

ValidationReport validate(const MarketModel& model, const ValidationOptions& opts) {
    ValidationReport report;
    const int n = std::max(opts.samples, 2);
    const PriceBox& box = model.box();
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        xs[static_cast<std::size_t>(i)] = box.lo + box.width() * i / (n - 1);

    auto add = [&](std::string name, bool passed, bool hard, std::string detail,
                   std::optional<double> witness = std::nullopt) {
        report.checks.push_back(
            AssumptionCheck{std::move(name), passed, hard, std::move(detail), witness});
    };

    add("horizon_positive", model.horizon > 0.0, true, "T = " + fmt_double(model.horizon));

    const auto& impact = model.impact();
    const SampleScan f = scan(impact.f, xs);
    const SampleScan df = scan(impact.df, xs);
    const SampleScan d2f = scan(impact.d2f, xs);
    report.min_impact = f.min;
    report.max_impact = f.max;

    const bool positive = f.finite && f.min > 0.0;
    add("impact_positive", positive, true,
        positive ? "inf f = " + fmt_double(f.min) : "f <= 0 at x = " + fmt_double(f.argmin),
        positive ? std::nullopt : std::optional<double>(f.argmin));
    add("impact_c2_bounded", f.finite && df.finite && d2f.finite, false,
        "sup|f'| = " + fmt_double(std::max(std::abs(df.min), std::abs(df.max))) +
            ", sup|f''| = " + fmt_double(std::max(std::abs(d2f.min), std::abs(d2f.max))) +
            (impact.analytic_derivatives ? "" : " (derivatives by central differences)"));
    if (impact.declared_lower_bound) {
        const double lb = *impact.declared_lower_bound;
        const bool ok = lb > 0.0 && f.min >= lb;
        add("impact_lower_bound", ok, false,
            "declared inf f = " + fmt_double(lb) + ", sampled min = " + fmt_double(f.min),
            ok ? std::nullopt : std::optional<double>(f.argmin));
    }
    add("curve_invertible", positive, false,
        positive ? "y -> x(x,y) strictly increasing since f > 0"
                 : "monotonicity of the impact curve not guaranteed");

    const auto& c = model.coefficients;
    const SampleScan mu = scan(c.mu.value, xs);
    const SampleScan sigma = scan(c.sigma.value, xs);
    report.min_sigma = sigma.min;
    report.mu_lipschitz_estimate = mu.max_quotient;
    report.sigma_lipschitz_estimate = sigma.max_quotient;

    const bool floor_ok = sigma.finite && c.sigma_floor > 0.0 && sigma.min >= c.sigma_floor;
    add("sigma_floor", floor_ok, true,
        "min sigma = " + fmt_double(sigma.min) + ", floor = " + fmt_double(c.sigma_floor),
        floor_ok ? std::nullopt : std::optional<double>(sigma.argmin));
    add("coefficients_bounded", mu.finite && sigma.finite, false,
        mu.finite ? (sigma.finite ? "finite on the box" : "sigma not finite")
                  : "mu not finite",
        mu.finite ? (sigma.finite ? std::nullopt : std::optional<double>(sigma.first_nonfinite))
                  : std::optional<double>(mu.first_nonfinite));
    add("mu_lipschitz", mu.max_quotient <= c.lipschitz_bound, false,
        "estimate " + fmt_double(mu.max_quotient) + " vs bound " + fmt_double(c.lipschitz_bound),
        mu.max_quotient <= c.lipschitz_bound ? std::nullopt
                                             : std::optional<double>(mu.argmax_quotient));
    add("sigma_lipschitz", sigma.max_quotient <= c.lipschitz_bound, false,
        "estimate " + fmt_double(sigma.max_quotient) + " vs bound " +
            fmt_double(c.lipschitz_bound),
        sigma.max_quotient <= c.lipschitz_bound ? std::nullopt
                                                : std::optional<double>(sigma.argmax_quotient));

    const SampleScan g0 = scan(model.claim.g0, xs);
    const bool g0_ok = g0.finite && g0.max_quotient <= opts.claim_lipschitz_bound;
    add("claim_continuous", g0_ok, false,
        "max difference quotient of g0 = " + fmt_double(g0.max_quotient),
        g0_ok ? std::nullopt : std::optional<double>(g0.argmax_quotient));
    if (model.claim.g1_kind == DeliveryKind::zero) {
        const SampleScan g1 = scan(model.claim.g1, xs);
        const bool zero = g1.finite && g1.min == 0.0 && g1.max == 0.0;
        add("delivery_zero", zero, false, zero ? "g1 == 0" : "g1 declared zero but is not",
            zero ? std::nullopt : std::optional<double>(g1.argmin));
    }
    return report;
}

MarketModel MarketModel::create(DiffusionCoefficients coefficients, ImpactCurve curve,
                                Claim claim, double horizon) {
    MarketModel model{std::move(coefficients), std::move(curve), std::move(claim), horizon};
    const auto report = validate(model);
    if (report.has_hard_failure()) {
        std::string msg = "invalid market model:";
        for (const auto& c : report.checks)
            if (c.hard && !c.passed) msg += " [" + c.name + ": " + c.detail + "]";
        throw InvalidArgument(msg);
    }
    return model;
}

}  // namespace impactlab
