// SPDX-License-Identifier: MIT
#include "doctest.h"
#include "impactlab/convergence.hpp"
#include "impactlab/csv.hpp"
#include "impactlab/errors.hpp"
#include "impactlab/interpolation.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace impactlab;

TEST_CASE("floats print with 17 significant digits and round-trip") {
    CHECK(csv::format(0.1) == "0.10000000000000001");
    CHECK(csv::format(1.0) == "1");
    CHECK(csv::format(-2.5e-300) == "-2.5e-300");
    for (double v : {M_PI, 1.0 / 3.0, 6.02214076e23, -1e-17})
        CHECK(std::stod(csv::format(v)) == v);
}

TEST_CASE("writer emits comment, header and LF-terminated rows") {
    std::ostringstream os;
    csv::Writer w(os);
    w.comment("config_hash", "abc");
    w.header({"a", "b"});
    w.row({1.5, 2.0});
    w.row(std::vector<std::string>{"x", ""});
    CHECK(os.str() == "# config_hash=abc\na,b\n1.5,2\nx,\n");
}

TEST_CASE("log-log fit recovers a power law") {
    std::vector<double> x{8, 16, 32, 64, 128}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -1.0));
    const auto fit = fit_loglog(x, y);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.residual < 1e-12);
}

TEST_CASE("grouped sums give the sup of node means and a jackknife error") {
    GroupedNodeSums g(4, 2);
    const double data[4][2] = {{1, 0}, {3, 0}, {5, 1}, {7, 1}};
    for (std::size_t k = 0; k < 4; ++k) {
        g.add(k, data[k]);
        g.add_count(k);
    }
    const auto row = g.sup_mean(10.0);
    CHECK(row.parameter == 10.0);
    CHECK(row.mse == doctest::Approx(4.0));
    // Leave-one-out means of node 0: 5, 13/3, 11/3, 3; jackknife variance (n-1)/n * sum (m_i - m)^2.
    const std::vector<double> loo{5.0, 13.0 / 3.0, 11.0 / 3.0, 3.0};
    double ss = 0.0;
    for (double m : loo) ss += (m - 4.0) * (m - 4.0);
    CHECK(row.std_err == doctest::Approx(std::sqrt(0.75 * ss)));
}

TEST_CASE("groups partition paths contiguously") {
    CHECK(group_of(0, 100, 20) == 0);
    CHECK(group_of(99, 100, 20) == 19);
    CHECK(group_of(5, 100, 20) == 1);
    CHECK_THROWS_AS(GroupedNodeSums(1, 3), InvalidArgument);
}

TEST_CASE("convergence table csv has a fit row") {
    ConvergenceTable t{"n", "sup_node_mse", {{8, 0.1, 0.01}, {16, 0.05, 0.005}}, {-1.0, 0.0, 0.0}, 10};
    std::ostringstream os;
    write_csv(t, os);
    CHECK(os.str() ==
          "n,sup_node_mse,std_err,slope\n8,0.10000000000000001,0.01,\n16,0.050000000000000003,"
          "0.0050000000000000001,\nfit,,0,-1\n");
}

TEST_CASE("cubic interpolation is exact on cubics") {
    std::vector<double> v;
    auto p = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x * x; };
    for (int i = 0; i <= 10; ++i) v.push_back(p(0.2 * i));
    for (double x : {0.0, 0.05, 0.77, 1.31, 1.99, 2.0}) CHECK(cubic_uniform(v, 0.0, 0.2, x) == doctest::Approx(p(x)));
    CHECK(cubic_uniform(std::vector<double>{1.0, 3.0}, 0.0, 1.0, 0.25) == doctest::Approx(1.5));
    CHECK_THROWS_AS((void)cubic_uniform(std::vector<double>{1.0}, 0.0, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("bicubic table is exact on tensor cubics") {
    const std::size_t rows = 7, cols = 9;
    std::vector<double> data(rows * cols);
    auto p = [](double r, double c) { return (1 + r * r * r) * (2 - c + c * c); };
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) data[i * cols + j] = p(0.5 * i, -1.0 + 0.25 * j);
    const BicubicTable t(data, rows, cols, 0.0, 0.5, -1.0, 0.25);
    for (double r : {0.0, 0.3, 1.7, 3.0})
        for (double c : {-1.0, -0.4, 0.61, 1.0}) CHECK(t(r, c) == doctest::Approx(p(r, c)));
}
