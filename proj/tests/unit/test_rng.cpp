#include <doctest.h>

#include <cmath>

#include "gbath/rng.hpp"

using namespace gbath;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::apply(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::apply(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("unit conversion stays inside the open interval") {
    CHECK(to_unit(0, 0) > 0.0);
    CHECK(to_unit(0xffffffffu, 0xffffffffu) < 1.0);
}

TEST_CASE("counter streams are addressable and distinct") {
    CounterRng a(42), b(42), c(43);
    CHECK(a.raw(7, Phase::bath, 11) == b.raw(7, Phase::bath, 11));
    CHECK(a.raw(7, Phase::bath, 11) != c.raw(7, Phase::bath, 11));
    CHECK(a.raw(7, Phase::bath, 11) != a.raw(7, Phase::quadratic, 11));
    CHECK(a.raw(7, Phase::bath, 11) != a.raw(7, Phase::bath, 11, 1));
    CHECK(a.raw(7, Phase::bath, 11) != a.raw(8, Phase::bath, 11));
}

TEST_CASE("uniform and normal draws have the right first two moments") {
    CounterRng rng(2024);
    const int n = 200000;
    double su = 0, suu = 0, sn = 0, snn = 0;
    for (int i = 0; i < n; ++i) {
        const auto u = rng.uniform2(0, Phase::diagnostic, i);
        su += u[0];
        suu += u[0] * u[0];
        const auto z = rng.normal2(1, Phase::diagnostic, i);
        sn += z[0] + z[1];
        snn += z[0] * z[0] + z[1] * z[1];
    }
    CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(suu / n - 1.0 / 3.0) < 0.003);
    CHECK(std::abs(sn / (2 * n)) < 4.0 / std::sqrt(2.0 * n));
    CHECK(std::abs(snn / (2 * n) - 1.0) < 4.0 * std::sqrt(2.0 / (2 * n)));
}
