#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "noisefloor/regularizers.hpp"
#include "noisefloor/rng.hpp"

using namespace noisefloor;

TEST_CASE("family names round-trip") {
    for (auto kind :
         {FamilyKind::tikhonov, FamilyKind::cutoff, FamilyKind::landweber})
        CHECK(family_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(family_from_string("ridge"), std::invalid_argument);
}

TEST_CASE("tikhonov shrinkage values") {
    const auto fam = RegularizerFamily::tikhonov();
    CHECK(fam.h(1.0, 1.0) == 0.5);
    CHECK(fam.h(2.0, 6.0) == 0.75);
    CHECK(fam.h(0.0, 0.0) == 0.0);  // limit convention
    CHECK(fam.h(1.0, std::numeric_limits<double>::infinity()) == 1.0);
    // Near the alpha -> 0 limit the coordinate is essentially retained.
    CHECK(fam.h(1e-12, 1.0) > 1.0 - 1e-11);
}

TEST_CASE("cutoff is a hard threshold") {
    const auto fam = RegularizerFamily::cutoff();
    CHECK(fam.h(3.0, 2.999) == 0.0);
    CHECK(fam.h(3.0, 3.0) == 1.0);
    CHECK(fam.h(3.0, 100.0) == 1.0);
}

TEST_CASE("landweber interpolates between 0 and 1") {
    const auto fam = RegularizerFamily::landweber(4.0);
    CHECK(fam.h(0.0, 1.0) == 1.0);
    CHECK(fam.h(1.0, 4.0) == 1.0);   // lambda == lambda_max
    CHECK(fam.h(1.0, 0.0) == 0.0);
    // One explicit value: 1 - (1 - 1/4)^(1/2).
    CHECK(fam.h(2.0, 1.0) ==
          doctest::Approx(1.0 - std::sqrt(0.75)).epsilon(1e-15));
    CHECK_THROWS_AS(RegularizerFamily::landweber(0.0), std::invalid_argument);
}

TEST_CASE("G(h) = 2h - h^2 with range checks") {
    CHECK(g_value(0.0) == 0.0);
    CHECK(g_value(1.0) == 1.0);
    CHECK(g_value(0.5) == 0.75);
    CHECK_THROWS_AS(g_value(-0.1), std::domain_error);
    CHECK_THROWS_AS(g_value(1.1), std::domain_error);
}

TEST_CASE("G dominates h on [0,1]") {
    for (int i = 0; i <= 100; ++i) {
        const double h = i / 100.0;
        const double g = g_value(h);
        CHECK(g >= h);
        CHECK(g <= 1.0);
    }
}

TEST_CASE("cutoff keeping k0 coordinates: W = D = k0 exactly") {
    const auto fam = RegularizerFamily::cutoff();
    Eigen::VectorXd lambda(6);
    lambda << 9, 7, 5, 3, 2, 1;
    const Eigen::Index n = 10;
    const double alpha = 4.0;  // keeps the first 3
    const auto f = spectral_functionals(fam, alpha, lambda, n);
    CHECK(f.w_alpha == 3.0);
    CHECK(f.d_alpha == 3.0);
    CHECK(f.q_alpha == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("tikhonov functionals on the two-eigenvalue example") {
    // lambda = (4, 1), alpha = 1, n = 3:
    // h = (0.8, 0.5), G = (0.96, 0.75), W = 1.71, D = 1.4841,
    // q = (1 - 1.71/3)^{-1} - 1 = 1.3255813953488372.
    const auto fam = RegularizerFamily::tikhonov();
    Eigen::VectorXd lambda(2);
    lambda << 4.0, 1.0;
    const auto f = spectral_functionals(fam, 1.0, lambda, 3);
    CHECK(f.w_alpha == doctest::Approx(1.71).epsilon(1e-15));
    CHECK(f.d_alpha == doctest::Approx(1.4841).epsilon(1e-15));
    CHECK(f.q_alpha == doctest::Approx(1.3255813953488372).epsilon(1e-14));
    CHECK(d_functional(fam, 1.0, lambda) ==
          doctest::Approx(1.4841).epsilon(1e-15));
}

TEST_CASE("degenerate correction W >= n throws") {
    const auto fam = RegularizerFamily::cutoff();
    Eigen::VectorXd lambda(3);
    lambda << 2, 2, 2;
    CHECK_THROWS_AS(spectral_functionals(fam, 1.0, lambda, 3),
                    std::domain_error);
}

TEST_CASE("condition A constant on known grids") {
    Eigen::VectorXd lambda(2);
    lambda << 4.0, 1.0;
    // Cutoff: W = D at every alpha, so K-hat = 1.
    {
        const std::vector<double> alphas{0.5, 2.0, 5.0};
        CHECK(condition_a_constant(RegularizerFamily::cutoff(), alphas, lambda,
                                   3) == doctest::Approx(1.0).epsilon(1e-15));
    }
    // Tikhonov at alpha = 1: W/D = 1.71/1.4841.
    {
        const std::vector<double> alphas{1.0};
        CHECK(condition_a_constant(RegularizerFamily::tikhonov(), alphas,
                                   lambda, 3) ==
              doctest::Approx(1.1522134627046695).epsilon(1e-14));
    }
    // Single eigenvalue, h = 1/2: W/D = G/G^2 = 1/0.75 = 4/3.
    {
        Eigen::VectorXd one(1);
        one << 1.0;
        const std::vector<double> alphas{1.0};
        CHECK(condition_a_constant(RegularizerFamily::tikhonov(), alphas, one,
                                   5) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    }
    const std::vector<double> empty;
    CHECK_THROWS_AS(
        condition_a_constant(RegularizerFamily::tikhonov(), empty, lambda, 3),
        std::invalid_argument);
}

TEST_CASE("W, D, q are nonincreasing in alpha for every family") {
    SubstreamRng rng(77, 0);
    Eigen::VectorXd lambda(5);
    double lmax = 0.0;
    for (int i = 0; i < 5; ++i) {
        lambda(i) = std::exp(2.0 * rng.next_gaussian());
        lmax = std::max(lmax, lambda(i));
    }
    const std::vector<RegularizerFamily> fams{RegularizerFamily::tikhonov(),
                                              RegularizerFamily::cutoff(),
                                              RegularizerFamily::landweber(lmax)};
    for (const auto& fam : fams) {
        for (int trial = 0; trial < 200; ++trial) {
            double a1 = std::exp(3.0 * rng.next_gaussian());
            double a2 = a1 * (1.01 + std::fabs(rng.next_gaussian()));
            const auto f1 = spectral_functionals(fam, a1, lambda, 20);
            const auto f2 = spectral_functionals(fam, a2, lambda, 20);
            CHECK(f2.w_alpha <= f1.w_alpha + 1e-12);
            CHECK(f2.d_alpha <= f1.d_alpha + 1e-12);
            CHECK(f2.q_alpha <= f1.q_alpha + 1e-12);
        }
    }
}

TEST_CASE("negative inputs to h are rejected") {
    const auto fam = RegularizerFamily::tikhonov();
    CHECK_THROWS_AS(fam.h(-1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(fam.h(1.0, -1.0), std::domain_error);
}
