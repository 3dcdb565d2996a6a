#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "spibb/rng.hpp"

using namespace spibb;

TEST_CASE("identical seeds produce identical streams") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 50; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(42);
    Rng d(43);
    bool all_equal = true;
    for (int i = 0; i < 50; ++i) all_equal = all_equal && (c.next_u64() == d.next_u64());
    CHECK_FALSE(all_equal);
}

TEST_CASE("derive_seed separates stages and indices") {
    std::set<std::uint64_t> seen;
    for (int stage = 0; stage < 8; ++stage) {
        for (int index = 0; index < 8; ++index) {
            seen.insert(derive_seed(99, stage, index));
        }
    }
    CHECK(seen.size() == 64);  // no collisions across the grid
    CHECK(derive_seed(99, 3, 5) == derive_seed(99, 3, 5));
    CHECK(derive_seed(99, 3, 5) != derive_seed(100, 3, 5));
}

TEST_CASE("uniform draws respect bounds") {
    Rng rng(7);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double v = rng.uniform(2.0, 5.0);
        CHECK(v >= 2.0);
        CHECK(v < 5.0);
        sum += v;
    }
    CHECK(std::abs(sum / 10000 - 3.5) < 0.1);

    for (int i = 0; i < 10000; ++i) {
        double v = rng.next_double();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("uniform_int covers its range") {
    Rng rng(11);
    std::vector<int> histogram(8, 0);
    for (int i = 0; i < 10000; ++i) {
        int v = rng.uniform_int(8);
        REQUIRE(v >= 0);
        REQUIRE(v < 8);
        ++histogram[static_cast<size_t>(v)];
    }
    for (int count : histogram) CHECK(count > 0);
}

TEST_CASE("dirichlet rows are positive distributions") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> row = rng.dirichlet(5);
        REQUIRE(row.size() == 5);
        double sum = 0.0;
        for (double v : row) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    std::vector<double> first = rng.dirichlet(5);
    std::vector<double> second = rng.dirichlet(5);
    CHECK(first != second);
}

TEST_CASE("categorical respects weights") {
    Rng rng(17);
    std::vector<double> weights{0.0, 1.0, 2.0, 1.0};
    std::vector<int> histogram(4, 0);
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        int v = rng.categorical(weights);
        REQUIRE(v >= 0);
        REQUIRE(v < 4);
        ++histogram[static_cast<size_t>(v)];
    }
    CHECK(histogram[0] == 0);  // zero weight is never drawn
    CHECK(std::abs(histogram[1] / double(n) - 0.25) < 0.02);
    CHECK(std::abs(histogram[2] / double(n) - 0.50) < 0.02);
    CHECK(std::abs(histogram[3] / double(n) - 0.25) < 0.02);
}

TEST_CASE("sample_without_replacement returns distinct in-range values") {
    Rng rng(19);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> sample = rng.sample_without_replacement(10, 4);
        REQUIRE(sample.size() == 4);
        std::set<int> unique(sample.begin(), sample.end());
        CHECK(unique.size() == 4);
        for (int v : sample) {
            CHECK(v >= 0);
            CHECK(v < 10);
        }
    }
    // k = n yields a permutation.
    std::vector<int> all = rng.sample_without_replacement(6, 6);
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<int>{0, 1, 2, 3, 4, 5});
}
