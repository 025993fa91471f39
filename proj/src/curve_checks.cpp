// SPDX-License-Identifier: MIT
#include "impactlab/curve_checks.hpp"

#include "impactlab/csv.hpp"
#include "impactlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace impactlab {

void IdentityCheckConfig::check() const {
    if (samples == 0) throw InvalidArgument("identity check: samples must be positive");
    if (!(x_hi > x_lo)) throw InvalidArgument("identity check: empty price range");
    if (!(share_range > 0.0)) throw InvalidArgument("identity check: share_range must be positive");
    if (!(tolerance > 0.0) || !(round_trip_tolerance > 0.0))
        throw InvalidArgument("identity check: tolerances must be positive");
    if (!(fd_step > 0.0)) throw InvalidArgument("identity check: fd_step must be positive");
}

namespace {

template <typename F>
double diff4(F&& g, double u, double h) {
    return (8.0 * (g(u + h) - g(u - h)) - (g(u + 2.0 * h) - g(u - 2.0 * h))) / (12.0 * h);
}

struct Tracker {
    IdentityResult row;

    void record(double err, double x, double y, double iota) {
        ++row.samples;
        if (!(err <= row.max_error)) {
            row.max_error = err;
            row.worst_x = x;
            row.worst_y = y;
            row.worst_iota = iota;
        }
    }
};

}  // namespace

std::vector<IdentityResult> check_identities(const ImpactCurve& curve,
                                             const IdentityCheckConfig& cfg) {
    cfg.check();
    const auto& f = curve.impact().f;
    const double h = cfg.fd_step;

    std::vector<Tracker> t;
    for (const char* name : {"reversibility", "size_derivative", "price_derivative", "cost_shift",
                             "cost_size_derivative", "cost_price_derivative", "round_trip",
                             "inverse_flow"}) {
        Tracker tr;
        tr.row.name = name;
        tr.row.tolerance = cfg.tolerance;
        t.push_back(tr);
    }
    t[6].row.tolerance = cfg.round_trip_tolerance;

    std::mt19937_64 gen(cfg.seed);
    auto uniform = [&](double lo, double hi) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    };

    for (std::size_t k = 0; k < cfg.samples; ++k) {
        const double x = uniform(cfg.x_lo, cfg.x_hi);
        const double y = uniform(-cfg.share_range, cfg.share_range);
        const double iota = uniform(-cfg.share_range, cfg.share_range);
        const double v = uniform(-cfg.share_range, cfg.share_range);

        const double X = curve.flow(x, y);
        const double fX = f(X);
        const double back = curve.flow(x, -y);

        t[0].record(std::abs(curve.flow(curve.flow(x, iota), -y - iota) - back), x, y, iota);

        const double dy = diff4([&](double s) { return curve.flow(x, s); }, y, h);
        t[1].record(std::abs(dy - fX), x, y, iota);
        const double dx = diff4([&](double u) { return curve.flow(u, y); }, x, h);
        t[2].record(std::abs(f(x) * dx - fX), x, y, iota);

        const double lhs = curve.cost(curve.flow(curve.flow(x, iota), -y - iota), y + iota) -
                           curve.cost(back, y);
        const double rhs = y * curve.delta_x(x, iota) + curve.cost(x, iota);
        t[3].record(std::abs(lhs - rhs), x, y, iota);

        const double target = y * fX;
        const double cy = diff4([&](double s) { return curve.cost(x, s); }, y, h);
        t[4].record(std::abs(cy - target), x, y, iota);
        const double cx = diff4([&](double u) { return curve.cost(u, y); }, x, h);
        t[5].record(std::abs(f(x) * cx + (X - x) - target), x, y, iota);

        const MarketState s{x, y, v};
        const auto r = curve.round_trip_state(curve.round_trip_state(s, iota), -iota);
        const double rt = std::max({std::abs(r.price - s.price), std::abs(r.shares - s.shares),
                                    std::abs(r.value - s.value)});
        t[6].record(rt, x, y, iota);

        t[7].record(std::abs(curve.inverse_flow(x, X) - y), x, y, iota);
    }

    std::vector<IdentityResult> out;
    for (auto& tr : t) out.push_back(tr.row);
    return out;
}

void write_csv(const std::vector<IdentityResult>& rows, std::ostream& out) {
    csv::Writer w(out);
    w.header({"identity", "samples", "max_error", "tolerance", "passed", "x", "y", "iota"});
    for (const auto& r : rows) {
        w.row({r.name, std::to_string(r.samples), csv::format(r.max_error),
               csv::format(r.tolerance), r.passed() ? "true" : "false", csv::format(r.worst_x),
               csv::format(r.worst_y), csv::format(r.worst_iota)});
    }
}

}  // namespace impactlab
