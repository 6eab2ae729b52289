#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace gbath {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

// Uniform double in the open interval (0,1) from two 32-bit words.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

// Stream phases; each (seed, step, phase, item, block) tuple addresses one Philox block.
enum class Phase : std::uint32_t {
    init = 1,
    pairing = 2,
    quadratic = 3,
    bath = 4,
    bath_partner = 5,
    diagnostic = 6,
};

// Deterministic random draws keyed by position in the computation rather than by call order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    std::array<std::uint32_t, 4> raw(std::uint64_t step, Phase phase, std::uint64_t item,
                                     std::uint32_t block = 0) const {
        const Philox4x32::Counter ctr{
            static_cast<std::uint32_t>(item),
            static_cast<std::uint32_t>(item >> 32) ^ (static_cast<std::uint32_t>(phase) << 24) ^ (block << 16),
            static_cast<std::uint32_t>(step),
            static_cast<std::uint32_t>(step >> 32)};
        return Philox4x32::apply(ctr, key_);
    }

    // Two uniforms in (0,1).
    std::array<double, 2> uniform2(std::uint64_t step, Phase phase, std::uint64_t item,
                                   std::uint32_t block = 0) const {
        const auto r = raw(step, phase, item, block);
        return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
    }

    // Four uniforms in (0,1) with 32-bit resolution each plus a half-ulp offset.
    std::array<double, 4> uniform4(std::uint64_t step, Phase phase, std::uint64_t item,
                                   std::uint32_t block = 0) const {
        const auto r = raw(step, phase, item, block);
        std::array<double, 4> u{};
        for (int i = 0; i < 4; ++i) u[i] = (static_cast<double>(r[i]) + 0.5) * 0x1.0p-32;
        return u;
    }

    // Two independent standard normals (Box-Muller).
    std::array<double, 2> normal2(std::uint64_t step, Phase phase, std::uint64_t item,
                                  std::uint32_t block = 0) const {
        const auto u = uniform2(step, phase, item, block);
        const double rad = std::sqrt(-2.0 * std::log(u[0]));
        const double ang = 2.0 * std::numbers::pi * u[1];
        return {rad * std::cos(ang), rad * std::sin(ang)};
    }

private:
    Philox4x32::Key key_;
};

}  // namespace gbath
