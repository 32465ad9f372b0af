#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "noisefloor/rng.hpp"

using noisefloor::SubstreamRng;
using noisefloor::inverse_normal_cdf;

TEST_CASE("inverse normal CDF hits reference quantiles") {
    CHECK(inverse_normal_cdf(0.5) == 0.0);
    // Frozen reference quantiles (standard normal).
    CHECK(inverse_normal_cdf(0.975) ==
          doctest::Approx(1.9599639845400545).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.841344746068543) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(inverse_normal_cdf(0.99865010196837) ==
          doctest::Approx(3.0).epsilon(1e-9));
    CHECK(inverse_normal_cdf(1e-10) ==
          doctest::Approx(-6.361340902404056).epsilon(1e-10));
}

TEST_CASE("inverse normal CDF is antisymmetric about 1/2") {
    for (double p : {0.01, 0.1, 0.3, 0.45, 0.49999}) {
        CHECK(inverse_normal_cdf(p) ==
              doctest::Approx(-inverse_normal_cdf(1.0 - p)).epsilon(1e-13));
    }
}

TEST_CASE("inverse normal CDF rejects arguments outside (0,1)") {
    CHECK_THROWS_AS(inverse_normal_cdf(0.0), std::domain_error);
    CHECK_THROWS_AS(inverse_normal_cdf(1.0), std::domain_error);
    CHECK_THROWS_AS(inverse_normal_cdf(-0.1), std::domain_error);
}

TEST_CASE("substreams are deterministic in (seed, replicate)") {
    SubstreamRng a(42, 7), b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_uniform() == b.next_uniform());
}

TEST_CASE("distinct replicates give distinct streams") {
    SubstreamRng a(42, 0), b(42, 1), c(43, 0);
    int equal_ab = 0, equal_ac = 0;
    for (int i = 0; i < 64; ++i) {
        const double ua = a.next_uniform();
        if (ua == b.next_uniform()) ++equal_ab;
        if (ua == c.next_uniform()) ++equal_ac;
    }
    CHECK(equal_ab == 0);
    CHECK(equal_ac == 0);
}

TEST_CASE("uniform draws stay in the open unit interval with sane moments") {
    SubstreamRng rng(1, 0);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("gaussian draws have standard moments") {
    SubstreamRng rng(9, 3);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.next_gaussian();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}
