#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "mno/prng.hpp"

using namespace mno;

TEST_CASE("split_mix is deterministic and stream-separating") {
    CHECK(split_mix(42, 0) == split_mix(42, 0));
    CHECK(split_mix(42, 0) != split_mix(42, 1));
    CHECK(split_mix(42, 0) != split_mix(43, 0));

    // stream separation: many streams from one seed are pairwise distinct
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 10000; ++s) seen.insert(split_mix(123, s));
    CHECK(seen.size() == 10000);
}

TEST_CASE("generator sequence is frozen") {
    // regression pins: first outputs of the documented algorithm, frozen from
    // the initial implementation so persisted seeds never change meaning
    CHECK(split_mix(42, 7) == 0xccf635ee9e9e2fa4ull);
    Rng r(12345);
    CHECK(r.next() == 0x437ffc4c886a05c7ull);
    CHECK(r.next() == 0x534ba539e7e3c98full);
    CHECK(r.next() == 0xd69aa2bf7120a046ull);

    Rng s1(7, 3), s2(split_mix(7, 3));
    CHECK(s1.next() == s2.next());
}

TEST_CASE("u01 lies in [0,1) and fills the unit interval") {
    Rng r(1);
    double mn = 1.0, mx = 0.0, sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.u01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        mn = std::min(mn, u);
        mx = std::max(mx, u);
        sum += u;
    }
    CHECK(mn < 1e-4);
    CHECK(mx > 1.0 - 1e-4);
    CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("uniform_int covers the range uniformly") {
    Rng r(2);
    std::vector<int> counts(12, 0);
    const int n = 120000;
    for (int i = 0; i < n; ++i) {
        const int v = r.uniform_int(-5, 6);
        REQUIRE(v >= -5);
        REQUIRE(v <= 6);
        ++counts[v + 5];
    }
    for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 1.0 / 12) < 0.01);
}

TEST_CASE("uniform_sym is symmetric in (-a, a)") {
    Rng r(3);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double v = r.uniform_sym(0.25);
        REQUIRE(std::abs(v) <= 0.25);
        sum += v;
    }
    CHECK(std::abs(sum / 100000) < 0.002);
}

TEST_CASE("normal has standard moments and deterministic pairing") {
    Rng r(4);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    CHECK(std::abs(s1 / n) < 0.02);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
    CHECK(std::abs(s4 / n - 3.0) < 0.15); // normal kurtosis

    // the cached spare must not depend on interleaved integer draws
    Rng a(5), b(5);
    const double a1 = a.normal(), a2 = a.normal();
    const double b1 = b.normal(), b2 = b.normal();
    CHECK(a1 == b1);
    CHECK(a2 == b2);
}
