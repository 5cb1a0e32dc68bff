#include <doctest.h>

#include <cmath>

#include "probe/rng.hpp"

using namespace probe;

TEST_CASE("identical seeds give identical streams") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("uniform stays in [0,1) and normal has sane moments") {
    Rng rng(9);
    double sum = 0.0, sumsq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(std::abs(sumsq / n - 1.0) < 0.05);
}

TEST_CASE("below(n) is unbiased enough and in range") {
    Rng rng(5);
    int counts[7] = {};
    for (int i = 0; i < 7000; ++i) ++counts[rng.below(7)];
    for (int c : counts) CHECK(c > 800);
}

TEST_CASE("node streams are independent of evaluation order") {
    Rng a = node_stream(77, 3, 0x10);
    Rng c = node_stream(77, 4, 0x10);
    (void)c.next_u64();
    Rng b = node_stream(77, 3, 0x10);
    for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("purpose salt changes the stream") {
    Rng a = node_stream(77, 3, 0x10);
    Rng b = node_stream(77, 3, 0x11);
    CHECK(a.next_u64() != b.next_u64());
}
