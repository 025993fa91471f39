// SPDX-License-Identifier: MIT
#include "impactlab/rng.hpp"

#include "impactlab/errors.hpp"

#include <cmath>
#include <numbers>

namespace impactlab {

namespace {

constexpr std::uint32_t kW32A = 0x9E3779B9;
constexpr std::uint32_t kW32B = 0xBB67AE85;
constexpr std::uint32_t kM4x32A = 0xD2511F53;
constexpr std::uint32_t kM4x32B = 0xCD9E8D57;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

// Uniform in (0, 1] from 53 random bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
    return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 1.0) * 0x1.0p-53;
}

// Two normals from one Philox block via Box-Muller.
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t path,
                                         std::uint64_t block) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block),
                                  static_cast<std::uint32_t>(block >> 32),
                                  static_cast<std::uint32_t>(path),
                                  static_cast<std::uint32_t>(path >> 32)};
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32)};
    const auto r = Philox4x32::generate(ctr, key);
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kM4x32A, ctr[0], lo0, hi0);
        mulhilo(kM4x32B, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW32A;
        key[1] += kW32B;
    }
    return ctr;
}

double standard_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step) noexcept {
    return normal_pair(seed, path, step / 2)[step % 2];
}

void fill_standard_normals(std::uint64_t seed, std::uint64_t path, std::uint64_t first,
                           std::span<double> out) noexcept {
    std::size_t i = 0;
    std::uint64_t step = first;
    if (step % 2 == 1 && i < out.size()) {
        out[i++] = normal_pair(seed, path, step / 2)[1];
        ++step;
    }
    while (i + 1 < out.size()) {
        const auto pair = normal_pair(seed, path, step / 2);
        out[i++] = pair[0];
        out[i++] = pair[1];
        step += 2;
    }
    if (i < out.size()) out[i] = normal_pair(seed, path, step / 2)[0];
}

std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t path, std::size_t steps,
                                        double dt) {
    std::vector<double> dw(steps);
    fill_standard_normals(seed, path, 0, dw);
    const double scale = std::sqrt(dt);
    for (auto& v : dw) v *= scale;
    return dw;
}

std::vector<double> coarsen_increments(std::span<const double> fine, std::size_t factor) {
    if (factor == 0 || fine.size() % factor != 0)
        throw InvalidArgument("coarsen_increments: factor must divide the number of increments");
    std::vector<double> out(fine.size() / factor, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < factor; ++j) out[i] += fine[i * factor + j];
    return out;
}

}  // namespace impactlab
