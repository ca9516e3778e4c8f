#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <set>

#include "sdflow/rng.hpp"

using namespace sdflow;

TEST_CASE("identical seeds give identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(43);
    bool any_diff = false;
    for (int i = 0; i < 10; ++i) any_diff |= (c.next_u64() != d.next_u64());
    CHECK(any_diff);
}

TEST_CASE("derived seeds separate streams and indices") {
    CHECK(derive_seed(1, SeedStream::Noise) != derive_seed(1, SeedStream::TargetSample));
    CHECK(derive_seed(1, SeedStream::Noise, 0) != derive_seed(1, SeedStream::Noise, 1));
    CHECK(derive_seed(1, SeedStream::Noise, 5) == derive_seed(1, SeedStream::Noise, 5));
    CHECK(derive_seed(1, SeedStream::Noise) != derive_seed(2, SeedStream::Noise));
}

TEST_CASE("normal draws have roughly standard moments") {
    Rng rng(7);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform_pos();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("below produces full range") {
    Rng rng(11);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t v = rng.below(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("sample_without_replacement gives distinct valid indices") {
    Rng rng(5);
    const auto idx = rng.sample_without_replacement(100, 30);
    CHECK(idx.size() == 30);
    std::set<int> uniq(idx.begin(), idx.end());
    CHECK(uniq.size() == 30);
    CHECK(*std::min_element(idx.begin(), idx.end()) >= 0);
    CHECK(*std::max_element(idx.begin(), idx.end()) < 100);
    CHECK_THROWS_AS(rng.sample_without_replacement(5, 6), std::invalid_argument);
}
