#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "twistband/twist.hpp"

using namespace twistband;

TEST_CASE("gauss_legendre integrates polynomials exactly") {
    // Order n is exact through degree 2n-1.
    const double val = integrate([](double x) { return std::pow(x, 9) + x * x; },
                                 -1.0, 1.0, 8, 1);
    CHECK(val == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("zero-amplitude bump is the unperturbed tube") {
    auto p = make_profile(TwistProfile::Kind::CosineBump, 1.0, 1.0, 0.0);
    CHECK(p.beta(0.0) == 0.0);
    CHECK(p.theta_dot(0.3) == 1.0);
    const auto dr = twist_deficit(p);
    CHECK(dr.classification == DeficitClass::Critical);
    CHECK(std::abs(dr.deficit) < 1e-14);
    CHECK(dr.reversion_margin == doctest::Approx(2.0));
}

TEST_CASE("cosine bump peaks at s = 0") {
    auto p = make_profile(TwistProfile::Kind::CosineBump, 1.0, 1.0, 0.5);
    CHECK(p.beta(0.0) == doctest::Approx(0.5));
    CHECK(p.max_abs_beta == doctest::Approx(0.5));
    CHECK(p.theta_dot(0.0) == doctest::Approx(0.5));
}

TEST_CASE("tent profile is flagged ineligible for the critical theorem") {
    auto p = make_profile(TwistProfile::Kind::Tent, 1.0, 1.0, 0.5);
    CHECK(!p.has_l2_second_derivative);
    CHECK_THROWS_AS(p.integral_theta_ddot_sq(), std::domain_error);
    auto v = validate_profile(p, TheoremKind::Critical);
    CHECK(!v.pass);
    bool found = false;
    for (const auto& f : v.failures)
        if (f.find("square-integrable") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("theta_dot reverts to beta0 outside the support") {
    auto p = make_profile(TwistProfile::Kind::Mixed, 1.2, 1.5, 0.4, 0.6);
    CHECK(p.theta_dot(1.5) == 1.2);
    CHECK(p.theta_dot(-1.5001) == 1.2);
    CHECK(p.theta_dot(100.0) == 1.2);
    CHECK(sample_theta(p, 2.0).theta_dot == 1.2);
}

TEST_CASE("cumulative angle closed forms") {
    const double c = 0.3, s0 = 1.4, b0 = 0.9;
    auto p = make_profile(TwistProfile::Kind::CosineBump, b0, s0, c);
    // int_0^{s0} beta = c*s0/2.
    CHECK(p.theta(s0) == doctest::Approx(b0 * s0 - c * s0 / 2.0).epsilon(1e-14));
    // Outside the support theta grows linearly at rate beta0.
    CHECK(p.theta(s0 + 2.0) == doctest::Approx(p.theta(s0) + 2.0 * b0).epsilon(1e-14));

    // Cross-check theta against quadrature of theta_dot for every family.
    for (auto kind : {TwistProfile::Kind::CosineBump, TwistProfile::Kind::HalfCosine,
                      TwistProfile::Kind::Mixed, TwistProfile::Kind::Tent}) {
        auto q = make_profile(kind, 1.1, 0.8, 0.5, 0.25);
        for (double s : {-2.0, -0.5, 0.3, 0.8, 3.0}) {
            // Split at the support edge so each piece is smooth.
            const double cut = std::clamp(s, -q.s0, q.s0);
            const double quad =
                integrate([&](double u) { return q.theta_dot(u); }, 0.0, cut, 16, 32) +
                q.beta0 * (s - cut);
            CHECK(q.theta(s) == doctest::Approx(quad).epsilon(1e-12));
        }
    }
}

TEST_CASE("closed-form integrals match quadrature for every family") {
    for (auto kind : {TwistProfile::Kind::CosineBump, TwistProfile::Kind::HalfCosine,
                      TwistProfile::Kind::Mixed, TwistProfile::Kind::Tent}) {
        auto p = make_profile(kind, 1.0, 1.3, 0.7, 0.4);
        const double ib = integrate([&](double s) { return p.beta(s); }, -p.s0,
                                    p.s0, 16, 16);
        const double ib2 = integrate([&](double s) { return p.beta(s) * p.beta(s); },
                                     -p.s0, p.s0, 16, 16);
        CHECK(p.integral_beta() == doctest::Approx(ib).epsilon(1e-12));
        CHECK(p.integral_beta_sq() == doctest::Approx(ib2).epsilon(1e-12));
        if (p.has_l2_second_derivative) {
            const double idd = integrate(
                [&](double s) { return p.beta_prime(s) * p.beta_prime(s); }, -p.s0,
                p.s0, 16, 16);
            CHECK(p.integral_theta_ddot_sq() == doctest::Approx(idd).epsilon(1e-12));
        }
    }
}

TEST_CASE("deficit of the reference cosine bump") {
    auto p = make_profile(TwistProfile::Kind::CosineBump, 1.0, 1.0, 0.5);
    const auto dr = twist_deficit(p);
    CHECK(dr.deficit == doctest::Approx(-0.8125).epsilon(1e-12));
    CHECK(std::abs(dr.deficit - dr.deficit_closed_form) < 1e-10);
    CHECK(dr.classification == DeficitClass::Attractive);
}

TEST_CASE("pure sine perturbation is repulsive") {
    // Mixed with c1 = 0: beta = -c2 sin(pi s / s0), so int beta = 0 and
    // I = c2^2 * s0 > 0.
    auto p = make_profile(TwistProfile::Kind::Mixed, 1.0, 1.0, 0.0, 0.4);
    const auto dr = twist_deficit(p);
    CHECK(dr.deficit == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(dr.classification == DeficitClass::Repulsive);
}

TEST_CASE("critical mixed profile from the quadratic root") {
    auto p = critical_solve(TwistProfile::Kind::Mixed, 1.0, 1.0, 0.5);
    CHECK(p.c2 == doctest::Approx(std::sqrt(4.0 / M_PI - 0.25)).epsilon(1e-12));
    const auto dr = twist_deficit(p);
    CHECK(std::abs(dr.deficit) <= dr.tolerance);
    CHECK(dr.classification == DeficitClass::Critical);
    CHECK(dr.reversion_margin > 0.6);
    CHECK(validate_profile(p, TheoremKind::Critical).pass);
}

TEST_CASE("one-signed bumps can never be critical") {
    CHECK_THROWS_WITH_AS(critical_solve(TwistProfile::Kind::CosineBump, 1.0, 1.0),
                         doctest::Contains("never be critical"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(critical_solve(TwistProfile::Kind::HalfCosine, 1.0, 1.0),
                         doctest::Contains("never be critical"),
                         std::invalid_argument);
}

TEST_CASE("one-signed slowdowns always have negative deficit") {
    // Property: 0 < beta < 2*beta0 pointwise implies beta^2 < 2*beta0*beta,
    // hence I < 0. 100 random amplitudes across the one-signed families.
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> amp(1e-6, 1.0);
    std::uniform_real_distribution<double> scale(0.2, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double b0 = scale(rng);
        const double s0 = scale(rng);
        const auto kind = (trial % 3 == 0)   ? TwistProfile::Kind::CosineBump
                          : (trial % 3 == 1) ? TwistProfile::Kind::HalfCosine
                                             : TwistProfile::Kind::Tent;
        const double c = amp(rng) * 2.0 * b0 * 0.999;
        auto p = make_profile(kind, b0, s0, c);
        REQUIRE(p.max_abs_beta < 2.0 * b0);
        CHECK(twist_deficit(p).deficit < 0.0);
    }
}

TEST_CASE("beta0 = 0 admits only the trivial critical profile") {
    CHECK_THROWS_AS(critical_solve(TwistProfile::Kind::CosineBump, 0.0, 1.0),
                    std::invalid_argument);
    auto zero = make_profile(TwistProfile::Kind::CosineBump, 0.0, 1.0, 0.0);
    CHECK(twist_deficit(zero).classification == DeficitClass::Critical);
}

TEST_CASE("validate_profile reports named failures") {
    auto p = make_profile(TwistProfile::Kind::CosineBump, 1.0, 1.0, 0.5);
    CHECK(validate_profile(p, TheoremKind::Main).pass);
    auto v = validate_profile(p, TheoremKind::Critical);
    CHECK(!v.pass);
    REQUIRE(!v.failures.empty());
    CHECK(v.failures[0] == "deficit nonzero");
}

TEST_CASE("make_profile rejects invalid parameters") {
    CHECK_THROWS_AS(make_profile(TwistProfile::Kind::CosineBump, 1.0, 0.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_profile(TwistProfile::Kind::CosineBump, 1.0, -1.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_profile(TwistProfile::Kind::CosineBump, -0.5, 1.0, 0.5),
                    std::invalid_argument);
}

TEST_CASE("profile kind names round trip") {
    for (auto kind : {TwistProfile::Kind::CosineBump, TwistProfile::Kind::HalfCosine,
                      TwistProfile::Kind::Mixed, TwistProfile::Kind::Tent})
        CHECK(profile_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(profile_kind_from_string("spiral"), std::invalid_argument);
}
