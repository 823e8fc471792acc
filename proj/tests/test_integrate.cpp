// Tests for the three integrators: accuracy against closed forms, exact
// sample-time landing, evaluation-count bookkeeping, symplectic behavior,
// variational flow, and failure modes.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pcdyn/integrate.hpp"
#include "pcdyn/models.hpp"

using namespace pcdyn;

namespace {

// Deterministic oscillator q'' = -q as an expanded system (order 0 with a
// zero-width parameter), so the symplectic and variational paths apply.
GalerkinSystem pure_oscillator(int r = 0) {
    return expand_model(make_model("harmonic_uncertain_freq", {{"alpha", 0.0}}), r);
}

const RhsFunction kDecay = [](double, std::span<const double> x, std::span<double> dx) {
    dx[0] = -x[0];
};

const RhsFunction kGrowth = [](double, std::span<const double> x, std::span<double> dx) {
    dx[0] = x[0];
};

const RhsFunction kRotation = [](double, std::span<const double> x, std::span<double> dx) {
    dx[0] = x[1];
    dx[1] = -x[0];
};

double oscillator_energy(const std::vector<double>& y) {
    return 0.5 * (y[0] * y[0] + y[1] * y[1]);
}

}  // namespace

TEST_CASE("adaptive rk45 tracks closed forms", "[integrate]") {
    IntegratorConfig cfg;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-12;
    cfg.t1 = 5.0;
    const Trajectory decay = integrate_rk45(kDecay, 1, cfg, std::vector<double>{1.0});
    CHECK(decay.terminal()[0] == Catch::Approx(std::exp(-5.0)).margin(1e-9));
    CHECK(decay.n_steps > 0);

    cfg.t1 = 2.0 * std::acos(-1.0);
    const Trajectory loop = integrate_rk45(kRotation, 2, cfg, std::vector<double>{1.0, 0.0});
    CHECK(loop.terminal()[0] == Catch::Approx(1.0).margin(1e-7));
    CHECK(loop.terminal()[1] == Catch::Approx(0.0).margin(1e-7));
}

TEST_CASE("requested sample times are hit exactly", "[integrate]") {
    IntegratorConfig cfg;
    cfg.t1 = 3.0;
    for (int i = 0; i <= 30; ++i) cfg.sample_times.push_back(0.1 * i);
    const Trajectory traj = integrate_rk45(kDecay, 1, cfg, std::vector<double>{1.0});
    REQUIRE(traj.times.size() == cfg.sample_times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        CHECK(traj.times[i] == cfg.sample_times[i]);  // bitwise, not approximate
        CHECK(traj.states[i][0] ==
              Catch::Approx(std::exp(-cfg.sample_times[i])).margin(1e-6));
    }

    // Fixed-step and symplectic paths land exactly as well.
    cfg.method = Method::rk4_fixed;
    cfg.h = 0.03;
    const Trajectory traj4 = integrate(kDecay, 1, cfg, std::vector<double>{1.0});
    REQUIRE(traj4.times.size() == cfg.sample_times.size());
    for (std::size_t i = 0; i < traj4.times.size(); ++i)
        CHECK(traj4.times[i] == cfg.sample_times[i]);

    const GalerkinSystem osc = pure_oscillator();
    cfg.method = Method::stormer_verlet;
    cfg.h = 0.01;
    const Trajectory trajs = integrate_symplectic(osc, cfg, std::vector<double>{1.0, 0.0});
    REQUIRE(trajs.times.size() == cfg.sample_times.size());
    for (std::size_t i = 0; i < trajs.times.size(); ++i)
        CHECK(trajs.times[i] == cfg.sample_times[i]);
}

TEST_CASE("rk45 evaluation count satisfies the FSAL identity", "[integrate]") {
    const GalerkinSystem sys = expand_model(make_model("duffing_forced"), 1);
    IntegratorConfig cfg;
    cfg.t1 = 50.0;
    const Trajectory traj = integrate(sys, cfg, std::vector<double>{1.0, 0.0, 0.0, 0.0});
    CHECK(traj.n_rhs_evaluations == 2 + 6 * (traj.n_steps + traj.n_rejected_steps));
    CHECK(traj.n_rejected_steps >= 0);
}

TEST_CASE("fixed-step rk4 shows fourth-order convergence", "[integrate]") {
    auto terminal_error = [](double h) {
        IntegratorConfig cfg;
        cfg.method = Method::rk4_fixed;
        cfg.h = h;
        cfg.t1 = 1.0;
        const Trajectory traj = integrate_rk4(kGrowth, 1, cfg, std::vector<double>{1.0});
        return std::fabs(traj.terminal()[0] - std::exp(1.0));
    };
    const double e1 = terminal_error(0.1);
    const double e2 = terminal_error(0.05);
    CHECK(e1 / e2 == Catch::Approx(16.0).epsilon(0.15));
}

TEST_CASE("rk4 integrates backward and returns home", "[integrate]") {
    const GalerkinSystem sys = expand_model(make_model("duffing_unforced"), 1);
    const std::vector<double> x0 = {1.0, 0.0, 0.0, 0.0};
    IntegratorConfig fwd;
    fwd.method = Method::rk4_fixed;
    fwd.h = 0.01;
    fwd.t1 = 10.0;
    const Trajectory out = integrate(sys, fwd, x0);
    IntegratorConfig bwd = fwd;
    bwd.t0 = 10.0;
    bwd.t1 = 0.0;
    const Trajectory back = integrate(sys, bwd, out.terminal());
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(back.terminal()[i] == Catch::Approx(x0[i]).margin(1e-8));
}

TEST_CASE("leapfrog is accurate, reversible, and energy-stable", "[integrate]") {
    const GalerkinSystem osc = pure_oscillator();
    const std::vector<double> x0 = {1.0, 0.0};

    IntegratorConfig cfg;
    cfg.method = Method::stormer_verlet;
    cfg.h = 0.001;
    cfg.t1 = 10.0;
    const Trajectory traj = integrate_symplectic(osc, cfg, x0);
    CHECK(traj.terminal()[0] == Catch::Approx(std::cos(10.0)).margin(1e-4));
    CHECK(traj.terminal()[1] == Catch::Approx(-std::sin(10.0)).margin(1e-4));

    IntegratorConfig bwd = cfg;
    bwd.t0 = 10.0;
    bwd.t1 = 0.0;
    const Trajectory back = integrate_symplectic(osc, bwd, traj.terminal());
    CHECK(back.terminal()[0] == Catch::Approx(1.0).margin(1e-10));
    CHECK(back.terminal()[1] == Catch::Approx(0.0).margin(1e-10));

    // Long run: energy error stays bounded at O(h^2), it does not drift.
    IntegratorConfig long_cfg;
    long_cfg.method = Method::stormer_verlet;
    long_cfg.h = 0.01;
    long_cfg.t1 = 1000.0;
    for (int i = 1; i <= 1000; ++i) long_cfg.sample_times.push_back(static_cast<double>(i));
    const Trajectory long_run = integrate_symplectic(osc, long_cfg, x0);
    double worst = 0.0;
    for (const auto& y : long_run.states)
        worst = std::max(worst, std::fabs(oscillator_energy(y) - 0.5));
    CHECK(worst < 1e-4);
}

TEST_CASE("leapfrog rejects non-separable and time-dependent coordinate rows", "[integrate]") {
    const GalerkinSystem damped = expand_model(make_model("duffing_forced"), 1);
    GalerkinSystem with_pairs = damped;
    with_pairs.canonical_pairs = {{0, 1}};
    IntegratorConfig cfg;
    cfg.method = Method::stormer_verlet;
    cfg.t1 = 1.0;
    CHECK_THROWS_WITH(integrate_symplectic(with_pairs, cfg, std::vector<double>(4, 0.0)),
                      Catch::Matchers::ContainsSubstring("not separable"));

    CHECK_THROWS_AS(integrate_symplectic(damped, cfg, std::vector<double>(4, 0.0)),
                    std::invalid_argument);  // no canonical pairs at all

    // Forcing on a coordinate row is not a kick-drift-kick system.
    PolynomialVectorField field;
    field.dim = 2;
    field.terms = {
        {0, 1.0, 0, {{1, 1}}},
        {0, 0.5, 0, {}, Forcing::cosine, 1.0},
        {1, -1.0, 0, {{0, 1}}},
    };
    GalerkinSystem bad = project(field, BasisFamily{BasisKind::hermite_gaussian, 0}, 0);
    bad.canonical_pairs = {{0, 1}};
    CHECK_THROWS_WITH(integrate_symplectic(bad, cfg, std::vector<double>{1.0, 0.0}),
                      Catch::Matchers::ContainsSubstring("time-dependent coordinate row"));
}

TEST_CASE("variational flow reproduces linear fundamental matrices", "[integrate]") {
    // Scalar growth: M(t) = exp(a t).
    PolynomialVectorField field;
    field.dim = 1;
    field.terms = {{0, 0.37, 0, {{0, 1}}}};
    const GalerkinSystem sys = project(field, BasisFamily{BasisKind::hermite_gaussian, 0}, 0);
    IntegratorConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
    cfg.t1 = 3.0;
    Matrix m0(1, 1);
    m0(0, 0) = 1.0;
    const VariationalResult var = integrate_variational(sys, cfg, std::vector<double>{2.0}, m0);
    const std::size_t last = var.trajectory.states.size() - 1;
    CHECK(var.state_at(last)[0] == Catch::Approx(2.0 * std::exp(0.37 * 3.0)).margin(1e-7));
    CHECK(var.matrix_at(last)(0, 0) == Catch::Approx(std::exp(0.37 * 3.0)).margin(1e-7));

    // Rotation: M(t) is the rotation matrix, volume exactly preserved.
    const GalerkinSystem osc = pure_oscillator();
    const Matrix id = Matrix::identity(2);
    cfg.t1 = 2.0;
    const VariationalResult rot =
        integrate_variational(osc, cfg, std::vector<double>{1.0, 0.0}, id);
    const std::size_t rlast = rot.trajectory.states.size() - 1;
    const Matrix M = rot.matrix_at(rlast);
    CHECK(M(0, 0) == Catch::Approx(std::cos(2.0)).margin(1e-8));
    CHECK(M(0, 1) == Catch::Approx(std::sin(2.0)).margin(1e-8));
    CHECK(M(1, 0) == Catch::Approx(-std::sin(2.0)).margin(1e-8));
    CHECK(M(1, 1) == Catch::Approx(std::cos(2.0)).margin(1e-8));
    CHECK(determinant(M) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("variational matrix matches the finite-difference flow map", "[integrate]") {
    const GalerkinSystem sys = expand_model(make_model("duffing_unforced"), 1);
    const std::vector<double> x0 = {1.0, 0.0, 0.1, 0.0};
    IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    cfg.t1 = 5.0;
    cfg.sample_times = {5.0};

    const VariationalResult var = integrate_variational(sys, cfg, x0, Matrix::identity(4));
    const Matrix M = var.matrix_at(var.trajectory.states.size() - 1);

    const double eps = 1e-6;
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<double> xp = x0, xm = x0;
        xp[j] += eps;
        xm[j] -= eps;
        const Trajectory fp = integrate(sys, cfg, xp);
        const Trajectory fm = integrate(sys, cfg, xm);
        for (std::size_t i = 0; i < 4; ++i) {
            const double fd = (fp.terminal()[i] - fm.terminal()[i]) / (2.0 * eps);
            CHECK(M(i, j) == Catch::Approx(fd).margin(2e-5));
        }
    }

    CHECK_THROWS_AS(
        [&] {
            IntegratorConfig bad = cfg;
            bad.method = Method::stormer_verlet;
            return integrate_variational(sys, bad, x0, Matrix::identity(4));
        }(),
        std::invalid_argument);
}

TEST_CASE("finite-time blowup raises a diagnosable failure", "[integrate]") {
    const RhsFunction quad = [](double, std::span<const double> x, std::span<double> dx) {
        dx[0] = x[0] * x[0];
    };
    IntegratorConfig cfg;
    cfg.t1 = 2.0;
    try {
        integrate_rk45(quad, 1, cfg, std::vector<double>{1.0});
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(e.t_fail > 0.9);
        CHECK(e.t_fail < 1.05);
    }
}

TEST_CASE("configuration errors are rejected up front", "[integrate]") {
    IntegratorConfig cfg;
    cfg.t1 = 1.0;
    cfg.sample_times = {0.5, 0.25};
    CHECK_THROWS_AS(integrate_rk45(kDecay, 1, cfg, std::vector<double>{1.0}),
                    std::invalid_argument);
    cfg.sample_times = {0.5, 2.0};
    CHECK_THROWS_AS(integrate_rk45(kDecay, 1, cfg, std::vector<double>{1.0}),
                    std::invalid_argument);
    cfg.sample_times.clear();
    cfg.t1 = -1.0;
    CHECK_THROWS_AS(integrate_rk45(kDecay, 1, cfg, std::vector<double>{1.0}),
                    std::invalid_argument);
    cfg.t1 = 1.0;
    cfg.method = Method::rk4_fixed;
    cfg.h = 0.0;
    CHECK_THROWS_AS(integrate(kDecay, 1, cfg, std::vector<double>{1.0}), std::invalid_argument);
    cfg.h = 0.01;
    cfg.method = Method::stormer_verlet;
    CHECK_THROWS_AS(integrate(kDecay, 1, cfg, std::vector<double>{1.0}), std::invalid_argument);
}
