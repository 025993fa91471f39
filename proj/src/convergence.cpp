// SPDX-License-Identifier: MIT
#include "impactlab/convergence.hpp"

#include "impactlab/csv.hpp"
#include "impactlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace impactlab {

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidArgument("fit_loglog needs at least two matching points");
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw NumericalError("fit_loglog: values must be positive");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw InvalidArgument("fit_loglog: abscissae must differ");
    LogLogFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = std::log(y[i]) - (fit.intercept + fit.slope * std::log(x[i]));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

void write_csv(const ConvergenceTable& table, std::ostream& out) {
    csv::Writer w(out);
    out << table.parameter_name << ',' << table.value_name << ",std_err,slope\n";
    for (const auto& r : table.rows)
        w.row({csv::format(r.parameter), csv::format(r.mse), csv::format(r.std_err), ""});
    w.row({"fit", "", csv::format(table.fit.residual), csv::format(table.fit.slope)});
}

GroupedNodeSums::GroupedNodeSums(std::size_t groups, std::size_t nodes)
    : nodes_(nodes), sums_(groups * nodes, 0.0), counts_(groups, 0) {
    if (groups < 2) throw InvalidArgument("jackknife needs at least two groups");
}

void GroupedNodeSums::add(std::size_t group, std::span<const double> per_node) {
    double* row = sums_.data() + group * nodes_;
    for (std::size_t i = 0; i < nodes_; ++i) row[i] += per_node[i];
}

void GroupedNodeSums::merge_group(const GroupedNodeSums& other, std::size_t group) {
    if (other.nodes_ != nodes_ || other.counts_.size() != counts_.size())
        throw InvalidArgument("merge_group: shape mismatch");
    add(group, std::span<const double>(other.sums_.data() + group * nodes_, nodes_));
    counts_[group] += other.counts_[group];
}

ConvergenceRow GroupedNodeSums::sup_mean(double parameter) const {
    const std::size_t g = counts_.size();
    std::vector<double> total(nodes_, 0.0);
    std::size_t count = 0;
    for (std::size_t k = 0; k < g; ++k) {
        count += counts_[k];
        for (std::size_t i = 0; i < nodes_; ++i) total[i] += sums_[k * nodes_ + i];
    }
    if (count == 0) throw InvalidArgument("no paths accumulated");
    double full = 0.0;
    for (double t : total) full = std::max(full, t / static_cast<double>(count));

    std::vector<double> loo;
    for (std::size_t k = 0; k < g; ++k) {
        if (counts_[k] == 0 || counts_[k] == count) continue;
        const auto rest = static_cast<double>(count - counts_[k]);
        double m = 0.0;
        for (std::size_t i = 0; i < nodes_; ++i)
            m = std::max(m, (total[i] - sums_[k * nodes_ + i]) / rest);
        loo.push_back(m);
    }
    double se = 0.0;
    if (loo.size() >= 2) {
        double mean = 0.0;
        for (double v : loo) mean += v;
        mean /= static_cast<double>(loo.size());
        double ss = 0.0;
        for (double v : loo) ss += (v - mean) * (v - mean);
        const auto gg = static_cast<double>(loo.size());
        se = std::sqrt((gg - 1.0) / gg * ss);
    }
    return ConvergenceRow{parameter, full, se};
}

std::size_t group_of(std::size_t path, std::size_t paths, std::size_t groups) {
    return std::min(groups - 1, path * groups / std::max<std::size_t>(paths, 1));
}

}  // namespace impactlab
