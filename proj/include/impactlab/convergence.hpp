// SPDX-License-Identifier: MIT
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace impactlab {

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    /// Root-mean-square residual of the regression in log space.
    double residual = 0.0;
};

/// Least squares fit of log(y) against log(x).
[[nodiscard]] LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct ConvergenceRow {
    double parameter = 0.0;  // n or epsilon
    double mse = 0.0;
    double std_err = 0.0;
};

struct ConvergenceTable {
    std::string parameter_name;  // "n" or "epsilon"
    std::string value_name;      // "sup_node_mse" or "mse"
    std::vector<ConvergenceRow> rows;
    LogLogFit fit;
    std::size_t paths = 0;
};

/// Header `<parameter>,<value>,std_err,slope`; data rows leave slope empty and a final
/// `fit` row carries the slope (and the fit residual in the std_err column).
void write_csv(const ConvergenceTable& table, std::ostream& out);

/// Per-node sums of a per-path quantity, kept per jackknife group.
class GroupedNodeSums {
public:
    GroupedNodeSums(std::size_t groups, std::size_t nodes);

    void add(std::size_t group, std::span<const double> per_node);
    void add_count(std::size_t group) { ++counts_[group]; }
    /// Adds the sums and count of `group` from `other` (same shape).
    void merge_group(const GroupedNodeSums& other, std::size_t group);

    [[nodiscard]] std::size_t groups() const noexcept { return counts_.size(); }
    /// max over nodes of the mean, and its delete-a-group jackknife standard error.
    [[nodiscard]] ConvergenceRow sup_mean(double parameter) const;

private:
    std::size_t nodes_;
    std::vector<double> sums_;  // groups x nodes
    std::vector<std::size_t> counts_;
};

/// Contiguous assignment of `paths` paths to `groups` jackknife groups.
[[nodiscard]] std::size_t group_of(std::size_t path, std::size_t paths, std::size_t groups);

}  // namespace impactlab
