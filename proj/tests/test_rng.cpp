#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "mixtau/rng.hpp"

using namespace mixtau;

TEST_CASE("identical seed and path reproduce identical draws", "[rng]") {
    RngStream a = RngStream::root(42).child(3).child(7);
    RngStream b = RngStream::root(42).child(3).child(7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct paths decorrelate and order does not matter", "[rng]") {
    RngStream root = RngStream::root(1);
    RngStream c1 = root.child(0);
    RngStream c2 = root.child(1);
    CHECK(c1.next_u64() != c2.next_u64());

    // drawing from one stream never affects a sibling derived earlier or later
    RngStream r1 = RngStream::root(9).child(4);
    const std::uint64_t expected = RngStream::root(9).child(5).next_u64();
    (void)r1.next_u64();
    (void)r1.next_u64();
    RngStream r2 = RngStream::root(9).child(5);
    CHECK(r2.next_u64() == expected);
}

TEST_CASE("uniform01 lies strictly inside (0,1) and is well spread", "[rng]") {
    RngStream s = RngStream::root(7);
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform01();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        mean += u;
    }
    mean /= n;
    // SE of the mean is 1/sqrt(12 n) ~ 0.00065
    CHECK(std::abs(mean - 0.5) < 0.002);
}

TEST_CASE("uniform_index covers the range", "[rng]") {
    RngStream s = RngStream::root(3);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 10000; ++i) ++counts[static_cast<std::size_t>(s.uniform_index(10))];
    for (int c : counts) CHECK(c > 800);
}

TEST_CASE("lineage records seed and path", "[rng]") {
    CHECK(RngStream::root(5).child(1).child(2).lineage() == "5/1/2");
}
