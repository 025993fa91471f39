// SPDX-License-Identifier: MIT
#include "doctest.h"

#include "impactlab/rng.hpp"

#include <cmath>

using namespace impactlab;

TEST_CASE("philox known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::generate(C{0, 0, 0, 0}, {0, 0}) ==
          C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                               {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                               {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normals are reproducible and independent of the fill offset") {
    std::vector<double> a(10), b(4);
    fill_standard_normals(7, 3, 0, a);
    fill_standard_normals(7, 3, 5, b);
    for (int i = 0; i < 4; ++i) CHECK(a[5 + i] == b[i]);
    for (int i = 0; i < 10; ++i) CHECK(a[i] == standard_normal(7, 3, i));
    CHECK(standard_normal(7, 3, 0) != standard_normal(7, 4, 0));
    CHECK(standard_normal(7, 3, 0) != standard_normal(8, 3, 0));
}

TEST_CASE("normal sample moments") {
    const int n = 200000;
    std::vector<double> z(n);
    fill_standard_normals(1, 0, 0, z);
    double m = 0, v = 0, k = 0;
    for (double x : z) m += x;
    m /= n;
    for (double x : z) {
        v += (x - m) * (x - m);
        k += std::pow(x - m, 4);
    }
    v /= n;
    k /= n;
    CHECK(std::abs(m) < 5.0 / std::sqrt(n));
    CHECK(std::abs(v - 1.0) < 0.02);
    CHECK(std::abs(k / (v * v) - 3.0) < 0.1);
}

TEST_CASE("coarsened increments sum blocks") {
    const auto fine = brownian_increments(2, 0, 8, 0.125);
    const auto coarse = coarsen_increments(fine, 4);
    REQUIRE(coarse.size() == 2);
    CHECK(coarse[0] == doctest::Approx(fine[0] + fine[1] + fine[2] + fine[3]));
    CHECK(coarse[1] == doctest::Approx(fine[4] + fine[5] + fine[6] + fine[7]));
}
