// Tests for the exact chaos coefficients of the uncertain-frequency
// oscillator: closed-form basis coefficients, oscillatory moments against a
// Simpson oracle, recurrence/quadrature agreement, the second-moment bound,
// and the volume-vs-decay contrast report.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pcdyn/harmonic.hpp"

using namespace pcdyn;

TEST_CASE("legendre monomial coefficients match hand values", "[harmonic]") {
    const double s5 = std::sqrt(5.0), s7 = std::sqrt(7.0);
    CHECK(legendre_monomial_coeff(0, 0) == Catch::Approx(1.0));
    CHECK(legendre_monomial_coeff(1, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(legendre_monomial_coeff(1, 1) == Catch::Approx(std::sqrt(3.0)));
    CHECK(legendre_monomial_coeff(2, 0) == Catch::Approx(-0.5 * s5));
    CHECK(legendre_monomial_coeff(2, 1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(legendre_monomial_coeff(2, 2) == Catch::Approx(1.5 * s5));
    CHECK(legendre_monomial_coeff(3, 1) == Catch::Approx(-1.5 * s7));
    CHECK(legendre_monomial_coeff(3, 3) == Catch::Approx(2.5 * s7));
    CHECK(legendre_monomial_coeff(4, 7) == 0.0);
    CHECK(legendre_monomial_coeff(-1, 0) == 0.0);
}

TEST_CASE("monomial coefficients reassemble the orthonormal basis", "[harmonic]") {
    const BasisFamily family{BasisKind::legendre_uniform, 8};
    std::vector<double> psi;
    for (double x : {-0.95, -0.4, 0.0, 0.33, 0.8, 1.0}) {
        eval_basis_all(family, 8, x, psi);
        for (int k = 0; k <= 8; ++k) {
            double acc = 0.0;
            for (int l = 0; l <= k; ++l)
                acc += legendre_monomial_coeff(k, l) * std::pow(x, l);
            INFO("k=" << k << " x=" << x);
            CHECK(acc == Catch::Approx(psi[static_cast<std::size_t>(k)]).margin(1e-11));
        }
    }
}

TEST_CASE("oscillatory moments match a brute-force oracle", "[harmonic]") {
    const HarmonicSetup setup;  // omega0 = 1, alpha = 0.25
    for (double t : {0.01, 0.5, 3.0, 20.0, 137.0}) {
        const auto I = cosine_power_moments(setup, 8, t);
        for (int l = 0; l <= 8; ++l) {
            const double ref = oracle::simpson(
                [&](double lam) {
                    return std::pow(lam, l) * std::cos((setup.omega0 + setup.alpha * lam) * t);
                },
                -1.0, 1.0, 4000);
            INFO("l=" << l << " t=" << t);
            CHECK(I[static_cast<std::size_t>(l)] == Catch::Approx(ref).margin(1e-8));
        }
    }

    // Deep oscillatory regime (alpha*t = 100): the recurrence carries most
    // orders; the oracle needs a matching fine mesh.
    const auto I = cosine_power_moments(setup, 6, 400.0);
    for (int l = 0; l <= 6; ++l) {
        const double ref = oracle::simpson(
            [&](double lam) {
                return std::pow(lam, l) * std::cos((1.0 + 0.25 * lam) * 400.0);
            },
            -1.0, 1.0, 40000);
        INFO("l=" << l);
        CHECK(I[static_cast<std::size_t>(l)] == Catch::Approx(ref).margin(1e-8));
    }
}

TEST_CASE("moments at t=0 are pure power integrals", "[harmonic]") {
    const HarmonicSetup setup;
    const auto I = cosine_power_moments(setup, 9, 0.0);
    for (int l = 0; l <= 9; ++l) {
        const double expected = (l % 2 == 0) ? 2.0 / (l + 1) : 0.0;
        CHECK(I[static_cast<std::size_t>(l)] == Catch::Approx(expected).margin(1e-14));
    }
    CHECK_THROWS_AS(cosine_power_moments(setup, -1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(cosine_power_moments(setup, 3, -1.0), std::invalid_argument);
    CHECK_THROWS_AS((HarmonicSetup{-1.0, 0.25}.validate()), std::invalid_argument);
}

TEST_CASE("projected coefficients start at the deterministic IC", "[harmonic]") {
    const HarmonicSetup setup;
    const ProjectionCoefficients c0 = exact_coefficients(setup, 6, 0.0);
    CHECK(c0.q[0] == Catch::Approx(1.0).margin(1e-13));
    for (int k = 1; k <= 6; ++k)
        CHECK(c0.q[static_cast<std::size_t>(k)] == Catch::Approx(0.0).margin(1e-13));
    for (int k = 0; k <= 6; ++k)
        CHECK(c0.p[static_cast<std::size_t>(k)] == Catch::Approx(0.0).margin(1e-13));

    // Q_0(t) is half the bare cosine integral at any time.
    for (double t : {0.7, 12.0, 80.0}) {
        const ProjectionCoefficients c = exact_coefficients(setup, 4, t);
        CHECK(c.q[0] == Catch::Approx(0.5 * cosine_power_moment(setup, 0, t)).margin(1e-11));
    }
    CHECK_THROWS_AS(exact_coefficients(setup, -1, 1.0), std::invalid_argument);
}

TEST_CASE("recurrence and quadrature coefficient routes agree", "[harmonic]") {
    const HarmonicSetup setup;
    for (double t : {0.0, 0.3, 1.0, 5.7, 20.0, 137.3, 499.0}) {
        const std::vector<double> via_recurrence = recurrence_coefficients(setup, 8, t);
        const ProjectionCoefficients via_quadrature = exact_coefficients(setup, 8, t);
        for (int k = 0; k <= 8; ++k) {
            INFO("k=" << k << " t=" << t);
            CHECK(via_recurrence[static_cast<std::size_t>(k)] ==
                  Catch::Approx(via_quadrature.q[static_cast<std::size_t>(k)]).margin(1e-8));
        }
    }
}

TEST_CASE("coefficient energy respects the second-moment bound", "[harmonic]") {
    const HarmonicSetup setup;

    // The bound itself equals the quadrature second moment of the solution.
    const QuadratureRule rule = gauss_rule(BasisKind::legendre_uniform, 60);
    for (double t : {0.5, 8.0, 20.0}) {
        double e_q2 = 0.0;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double c = std::cos((setup.omega0 + setup.alpha * rule.nodes[j]) * t);
            e_q2 += rule.weights[j] * c * c;
        }
        CHECK(second_moment_bound(setup, t) == Catch::Approx(e_q2).margin(1e-10));
    }

    // Bessel: any truncation holds at most that much coefficient energy, and
    // deeper truncations capture more of it.
    for (double t : {1.0, 20.0, 90.0}) {
        const auto q8 = exact_coefficients(setup, 8, t).q;
        double sum8 = 0.0;
        for (double v : q8) sum8 += v * v;
        CHECK(sum8 <= second_moment_bound(setup, t) + 1e-8);
    }
    const double t_mid = 20.0;  // alpha*t = 5: orders above 4 are active
    const auto q4 = exact_coefficients(setup, 4, t_mid).q;
    const auto q8 = exact_coefficients(setup, 8, t_mid).q;
    double sum4 = 0.0, sum8 = 0.0;
    for (double v : q4) sum4 += v * v;
    for (double v : q8) sum8 += v * v;
    const double bound = second_moment_bound(setup, t_mid);
    CHECK(bound - sum8 < bound - sum4);
    CHECK(bound - sum8 >= -1e-8);
}

TEST_CASE("zero-width frequency band shows no contrast", "[harmonic]") {
    const HarmonicSetup narrow{1.0, 0.0};
    IntegratorConfig cfg;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-12;
    const LiouvilleReport report = liouville_contrast(narrow, 2, 20.0, cfg, 21);
    REQUIRE(report.times.size() == 21);
    for (std::size_t i = 0; i < report.times.size(); ++i) {
        CHECK(report.det_phi[i] == Catch::Approx(1.0).margin(1e-7));
        CHECK(report.exact_norm[i] == Catch::Approx(1.0).margin(1e-9));
        CHECK(report.mismatch[i] <= 1e-6);
    }
    CHECK_FALSE(report.t_star.has_value());
}

TEST_CASE("dephasing drains the exact coefficients but not the volume", "[harmonic]") {
    const HarmonicSetup setup;
    IntegratorConfig cfg;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-12;
    const LiouvilleReport report = liouville_contrast(setup, 2, 50.0, cfg, 26);
    REQUIRE(report.times.size() == 26);
    CHECK(report.order == 2);
    CHECK(report.times.front() == 0.0);
    CHECK(report.times.back() == Catch::Approx(50.0));
    REQUIRE(report.exact_rows.front().size() == 6);  // Q_0..Q_2 then P_0..P_2
    REQUIRE(report.pc_rows.front().size() == 6);

    for (double det : report.det_phi) CHECK(det == Catch::Approx(1.0).margin(1e-6));
    // Initially the truncated system tracks the exact coefficients...
    CHECK(report.mismatch.front() <= 1e-12);
    // ...but a truncation this shallow loses them well before t = 50.
    CHECK(report.mismatch.back() > 10.0 * report.mismatch[1]);
    CHECK(report.exact_norm.back() < report.exact_norm.front());
    CHECK(report.n_rhs_evaluations > 0);

    CHECK_THROWS_AS(liouville_contrast(setup, 2, -1.0, cfg, 10), std::invalid_argument);
    CHECK_THROWS_AS(liouville_contrast(setup, 2, 10.0, cfg, 1), std::invalid_argument);
}
