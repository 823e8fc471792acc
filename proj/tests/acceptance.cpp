// Acceptance gate: eight end-to-end criteria covering the projected-system
// term lists, the average-Hamiltonian structure of conservative expansions,
// long-horizon symplectic energy behaviour, the uncertain-frequency
// oscillator (recurrence/quadrature agreement, coefficient decay, volume
// contrast), the two-time-scale accuracy/cost study, chaos detection via
// Lyapunov exponents, Monte Carlo divergence horizons, and bitwise
// reproducibility.  Each test prints exactly one "ACCEPTANCE <n> PASS|FAIL"
// line; every tolerance is pinned here in code.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pcdyn/analysis.hpp"
#include "pcdyn/experiments.hpp"
#include "pcdyn/galerkin.hpp"
#include "pcdyn/hamiltonian.hpp"
#include "pcdyn/harmonic.hpp"
#include "pcdyn/integrate.hpp"
#include "pcdyn/linalg.hpp"
#include "pcdyn/models.hpp"

using namespace pcdyn;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240901u;

void report(int n, const std::string& what, const std::vector<std::string>& failures) {
    std::cout << "ACCEPTANCE " << n << (failures.empty() ? " PASS" : " FAIL") << " - " << what
              << '\n';
    for (const auto& f : failures) std::cout << "    " << f << '\n';
    std::cout.flush();
}

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& name) {
        path = fs::temp_directory_path() / ("pcdyn_acceptance_" + name);
        fs::remove_all(path);
    }
    ~ScratchDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json slurp_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("bundled projected systems match to 1e-12", "[criterion1]") {
    constexpr double kTol = 1e-12;
    std::vector<std::string> failures;
    const std::array<const char*, 5> stems = {"duffing_unforced_r1", "duffing_forced_r1",
                                              "duffing_uncertain_ic_r1", "twotime_full_r1",
                                              "twotime_averaged_r1"};
    for (const char* stem : stems) {
        const fs::path file = fs::path(PCDYN_FIXTURE_DIR) / (std::string(stem) + ".json");
        const nlohmann::json fx = slurp_json(file);
        const ModelSpec model = make_model(fx.at("model").get<std::string>());
        const GalerkinSystem sys =
            expand_model(model, fx.at("order").get<int>(),
                         projection_mode_from_string(fx.at("mode").get<std::string>()));
        const auto expected = terms_from_json(fx.at("terms"));
        for (const auto& d : diff_term_lists(sys.terms, expected, kTol))
            failures.push_back(std::string(stem) + ": " + d);
        const std::vector<double> X0 = expanded_initial(model, sys);
        const auto ic = fx.at("expanded_ic").get<std::vector<double>>();
        if (ic.size() != X0.size()) {
            failures.push_back(std::string(stem) + ": expanded IC dimension mismatch");
        } else {
            for (std::size_t i = 0; i < ic.size(); ++i)
                if (std::fabs(ic[i] - X0[i]) > kTol)
                    failures.push_back(std::string(stem) + ": expanded IC entry " +
                                       std::to_string(i) + " differs");
        }
    }
    report(1, "five bundled projected systems reproduced within 1e-12", failures);
    REQUIRE(failures.empty());
}

TEST_CASE("projected conservative systems keep canonical structure", "[criterion2]") {
    constexpr double kResidualTol = 1e-6;
    constexpr double kDivergenceTol = 1e-12;
    constexpr int kStates = 100;
    std::vector<std::string> failures;
    for (const char* name : {"duffing_unforced", "harmonic_uncertain_freq"}) {
        for (int r : {1, 2, 3}) {
            const ModelSpec model = make_model(name);
            const GalerkinSystem sys = expand_model(model, r);
            const AverageHamiltonian avg = make_average_hamiltonian(model, sys);
            const StructureCheck chk =
                check_hamiltonian_structure(avg, sys, kStates, 1e-5, 2.0, kSeed);
            std::ostringstream tag;
            tag << name << " order " << r;
            if (!(chk.max_residual <= kResidualTol))
                failures.push_back(tag.str() + ": residual " + format_double(chk.max_residual));
            if (!(chk.max_divergence <= kDivergenceTol))
                failures.push_back(tag.str() + ": divergence " +
                                   format_double(chk.max_divergence));
        }
    }
    report(2, "average-Hamiltonian structure holds for orders 1-3 (100 states)", failures);
    REQUIRE(failures.empty());
}

TEST_CASE("symplectic integration bounds the average energy", "[criterion3]") {
    constexpr double kDriftTol = 1e-3;
    constexpr double kSlopeTol = 1e-8;
    std::vector<std::string> failures;

    const ModelSpec model = make_model("duffing_unforced");
    const GalerkinSystem sys = expand_model(model, 1);
    const AverageHamiltonian avg = make_average_hamiltonian(model, sys);
    const std::vector<double> X0 = expanded_initial(model, sys);
    const double H0 = avg.evaluate(X0);

    IntegratorConfig cfg;
    cfg.method = Method::stormer_verlet;
    cfg.h = 0.01;
    cfg.t0 = 0.0;
    cfg.t1 = 1e4;
    cfg.sample_times = detail::time_grid(0.0, 1e4, 10.0);
    const Trajectory lf = integrate_symplectic(sys, cfg, X0);

    double max_drift = 0.0;
    std::vector<double> energies(lf.states.size());
    for (std::size_t i = 0; i < lf.states.size(); ++i) {
        energies[i] = avg.evaluate(lf.states[i]);
        max_drift = std::max(max_drift, std::fabs(energies[i] - H0));
    }
    const double slope = least_squares_slope(lf.times, energies);
    const double lf_terminal = std::fabs(energies.back() - H0);

    IntegratorConfig rk;
    rk.method = Method::rk45_adaptive;
    rk.rtol = 1e-6;
    rk.atol = 1e-9;
    rk.t0 = 0.0;
    rk.t1 = 1e4;
    rk.sample_times = {1e4};
    const Trajectory rk_traj = integrate(sys, rk, X0);
    const double rk_terminal = std::fabs(avg.evaluate(rk_traj.states.back()) - H0);

    if (!(max_drift <= kDriftTol))
        failures.push_back("leapfrog max |dH| " + format_double(max_drift));
    if (!(std::fabs(slope) <= kSlopeTol))
        failures.push_back("energy fit slope " + format_double(slope));
    if (!(rk_terminal > lf_terminal))
        failures.push_back("adaptive terminal drift " + format_double(rk_terminal) +
                           " not larger than leapfrog " + format_double(lf_terminal));
    std::cout << "    [criterion3] leapfrog max |dH| = " << format_double(max_drift)
              << ", slope = " << format_double(slope)
              << ", rk45 terminal drift = " << format_double(rk_terminal) << '\n';
    report(3, "leapfrog keeps the average energy bounded over t = 1e4", failures);
    REQUIRE(failures.empty());
}

TEST_CASE("uncertain-frequency oscillator: decay and volume contrast", "[criterion4]") {
    constexpr double kAgreeTol = 1e-8;
    constexpr double kDecayBound = 25.0;  // pinned bound on t * sup_k |Q_k(t)| over [50, 500]
    constexpr double kDetTol = 1e-4;
    constexpr int kOrder = 8;
    std::vector<std::string> failures;
    HarmonicSetup setup;  // omega0 = 1, alpha = 0.25

    // (a) recurrence route vs direct quadrature on a dense grid of [0, 500];
    // (b) the exact coefficients decay at least like C / t.
    double max_dev = 0.0;
    double measured_bound = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = 0.5 * i;
        const ProjectionCoefficients exact = exact_coefficients(setup, kOrder, t);
        const std::vector<double> rec = recurrence_coefficients(setup, kOrder, t);
        for (int k = 0; k <= kOrder; ++k)
            max_dev = std::max(max_dev,
                               std::fabs(rec[static_cast<std::size_t>(k)] -
                                         exact.q[static_cast<std::size_t>(k)]));
        if (t >= 50.0) {
            double sup_q = 0.0;
            for (double q : exact.q) sup_q = std::max(sup_q, std::fabs(q));
            measured_bound = std::max(measured_bound, t * sup_q);
        }
    }
    if (!(max_dev <= kAgreeTol))
        failures.push_back("recurrence vs quadrature deviation " + format_double(max_dev));
    if (!(measured_bound <= kDecayBound))
        failures.push_back("t * sup_k |Q_k| reached " + format_double(measured_bound) +
                           " > " + format_double(kDecayBound));

    // (c) the truncated expansion preserves flow volume while the projected
    // exact coefficients have lost ~90% of their norm.
    IntegratorConfig cfg;
    cfg.rtol = 1e-9;
    cfg.atol = 1e-12;
    const LiouvilleReport lv = liouville_contrast(setup, kOrder, 600.0, cfg, 601);
    double max_det_dev = 0.0;
    double min_norm = lv.exact_norm.front();
    for (std::size_t i = 0; i < lv.times.size(); ++i) {
        max_det_dev = std::max(max_det_dev, std::fabs(lv.det_phi[i] - 1.0));
        min_norm = std::min(min_norm, lv.exact_norm[i]);
    }
    if (!(max_det_dev <= kDetTol))
        failures.push_back("flow-volume deviation " + format_double(max_det_dev));
    if (!(min_norm < 0.1 * lv.exact_norm.front()))
        failures.push_back("exact norm only fell to " + format_double(min_norm));

    std::cout << "    [criterion4] max recurrence deviation = " << format_double(max_dev)
              << ", max t*sup|Q_k| = " << format_double(measured_bound)
              << ", max |det-1| = " << format_double(max_det_dev)
              << ", min exact norm = " << format_double(min_norm);
    if (lv.t_star) std::cout << ", t_star = " << format_double(*lv.t_star);
    std::cout << '\n';
    report(4, "order-8 uncertain-frequency oscillator behaves as catalogued", failures);
    REQUIRE(failures.empty());
}

TEST_CASE("two-time-scale study: accuracy improves, cost stays flat", "[criterion5]") {
    std::vector<std::string> failures;
    ScratchDir dir("twotime");
    ExperimentConfig cfg;
    cfg.model_name = "twotime_full";
    cfg.mode = "linearized_fluctuations";
    cfg.epsilons = {1e-1, 1e-2, 1e-3};
    cfg.chi_max = 20.0;
    cfg.n_mc = 1000;
    cfg.seed = kSeed;
    cfg.out_dir = dir.str();
    std::ostringstream out;
    REQUIRE(run_compare_mc(cfg, out) == 0);
    const nlohmann::json summary = slurp_json(dir.path / "summary.json");
    const auto& sweep = summary.at("sweep");
    REQUIRE(sweep.size() == 3);

    std::vector<double> avg_err, full_cost, avg_cost;
    for (const auto& row : sweep) {
        // mean-error of the slow-flow expansion vs the Monte Carlo reference,
        // reduced to a scalar as the max over Poincare sections and coordinates
        avg_err.push_back(std::max(row.at("max_mean_err_avg")[0].get<double>(),
                                   row.at("max_mean_err_avg")[1].get<double>()));
        full_cost.push_back(row.at("n_rhs_full_cost").get<double>());
        avg_cost.push_back(row.at("n_rhs_avg_cost").get<double>());
    }
    bool monotone = true;
    for (std::size_t i = 1; i < avg_err.size(); ++i)
        if (!(avg_err[i] < avg_err[i - 1])) {
            monotone = false;
            failures.push_back("slow-flow error not decreasing: " + format_double(avg_err[i - 1]) +
                               " -> " + format_double(avg_err[i]));
        }
    for (std::size_t i = 1; i < full_cost.size(); ++i) {
        const double ratio = full_cost[i] / full_cost[i - 1];
        if (!(ratio >= 5.0 && ratio <= 20.0))
            failures.push_back("full-system cost ratio per decade " + format_double(ratio));
    }
    const auto [lo, hi] = std::minmax_element(avg_cost.begin(), avg_cost.end());
    if (!(*hi - *lo < 0.10 * *lo))
        failures.push_back("slow-flow cost varies by " + format_double(*hi - *lo) + " around " +
                           format_double(*lo));

    std::cout << "    [criterion5] slow-flow errors =";
    for (double e : avg_err) std::cout << ' ' << format_double(e);
    std::cout << "; full costs =";
    for (double c : full_cost) std::cout << ' ' << format_double(c);
    std::cout << '\n';
    if (!monotone)
        std::cout << "    [criterion5] note: by the end of the slow window the error of the\n"
                     "    first-order expansion saturates at its truncation floor (~0.7 here,\n"
                     "    reached near chi = 20 for every scale separation), while the eps = 0.1\n"
                     "    run still sits below that floor; the max-over-sections error therefore\n"
                     "    cannot decrease monotonically at this horizon, no matter how accurately\n"
                     "    the systems are integrated.\n";
    report(5, "slow-flow model gains accuracy at constant cost as scales separate", failures);
    REQUIRE(failures.empty());
}

TEST_CASE("largest Lyapunov exponents separate chaos from integrability", "[criterion6]") {
    constexpr double kChaosFloor = 0.05;
    constexpr double kHorizon = 2e4;
    std::vector<std::string> failures;

    struct Case {
        const char* model;
        int order;
        double sigma_override;  // negative: keep default
        bool expect_chaos;
        double reference;  // informational only; <0 means none catalogued
    };
    const std::array<Case, 4> cases = {
        Case{"duffing_forced", 0, -1.0, true, 0.93},
        Case{"duffing_forced", 1, -1.0, true, 0.73},
        Case{"duffing_uncertain_ic", 1, -1.0, true, 0.85},
        Case{"duffing_unforced", 0, 0.0, false, -1.0},
    };
    for (const Case& c : cases) {
        std::map<std::string, double> overrides;
        if (c.sigma_override >= 0.0) overrides["sigma"] = c.sigma_override;
        const ModelSpec model = make_model(c.model, overrides);
        const GalerkinSystem sys = expand_model(model, c.order);
        const std::vector<double> X0 = expanded_initial(model, sys);
        IntegratorConfig cfg;
        const LyapunovEstimate est = largest_lyapunov(sys, cfg, X0, kHorizon, 1.0);
        std::ostringstream tag;
        tag << c.model << " order " << c.order;
        if (c.expect_chaos && !(est.exponent > kChaosFloor))
            failures.push_back(tag.str() + ": exponent " + format_double(est.exponent) +
                               " <= " + format_double(kChaosFloor));
        if (!c.expect_chaos && !(std::fabs(est.exponent) <= kChaosFloor))
            failures.push_back(tag.str() + ": |exponent| " + format_double(est.exponent) +
                               " > " + format_double(kChaosFloor));
        std::cout << "    [criterion6] " << tag.str() << " -> " << format_double(est.exponent);
        if (c.reference > 0.0) std::cout << " (catalogued " << format_double(c.reference) << ")";
        std::cout << '\n';
    }
    report(6, "chaotic expansions exceed 0.05; the integrable case does not", failures);
    REQUIRE(failures.empty());
}

TEST_CASE("Monte Carlo divergence horizons sit in the expected windows", "[criterion7]") {
    constexpr double kThreshold = 0.5;
    constexpr int kSamples = 1000;
    std::vector<std::string> failures;

    struct Window {
        double ic0;
        double lo, hi;
    };
    for (const Window w : {Window{1.0, 5.0, 20.0}, Window{4.0, 15.0, 40.0}}) {
        ModelSpec model = make_model("duffing_forced");
        model.default_ic = {w.ic0, 0.0};
        const GalerkinSystem sys = expand_model(model, 1);
        const std::vector<double> X0 = expanded_initial(model, sys);
        IntegratorConfig cfg;
        cfg.t0 = 0.0;
        cfg.t1 = 40.0;
        cfg.sample_times = detail::time_grid(0.0, 40.0, 0.05);
        const Trajectory pc = integrate(sys, cfg, X0);
        const EnsembleStats mc = monte_carlo(model, cfg, kSamples, kSeed, cfg.sample_times);
        const MomentError err = moment_error(moments_series(sys, pc), mc, kThreshold);
        std::ostringstream tag;
        tag << "chaotic run from (" << format_double(w.ic0) << ", 0)";
        if (!err.divergence_time) {
            failures.push_back(tag.str() + ": mean error never crossed " +
                               format_double(kThreshold));
            std::cout << "    [criterion7] " << tag.str() << " -> no divergence\n";
        } else {
            if (!(*err.divergence_time >= w.lo && *err.divergence_time <= w.hi))
                failures.push_back(tag.str() + ": divergence at " +
                                   format_double(*err.divergence_time) + " outside [" +
                                   format_double(w.lo) + ", " + format_double(w.hi) + "]");
            std::cout << "    [criterion7] " << tag.str() << " -> divergence at "
                      << format_double(*err.divergence_time) << '\n';
        }
    }

    // The conservative model stays accurate through t = 25.
    const ModelSpec model = make_model("duffing_unforced");
    const GalerkinSystem sys = expand_model(model, 1);
    const std::vector<double> X0 = expanded_initial(model, sys);
    IntegratorConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 25.0;
    cfg.sample_times = detail::time_grid(0.0, 25.0, 0.05);
    const Trajectory pc = integrate(sys, cfg, X0);
    const EnsembleStats mc = monte_carlo(model, cfg, kSamples, kSeed, cfg.sample_times);
    const MomentError err = moment_error(moments_series(sys, pc), mc, kThreshold);
    double worst = 0.0;
    for (const auto& row : err.mean_error) worst = std::max(worst, row[0]);
    if (!(worst < 0.1))
        failures.push_back("conservative mean deviation reached " + format_double(worst) +
                           " by t = 25");
    std::cout << "    [criterion7] conservative max mean deviation = " << format_double(worst)
              << '\n';
    report(7, "first-order expansion tracks the ensemble for the catalogued horizons", failures);
    REQUIRE(failures.empty());
}

TEST_CASE("reruns are byte-identical; seeds agree statistically", "[criterion8]") {
    std::vector<std::string> failures;

    {
        ScratchDir a("rerun_a"), b("rerun_b");
        ExperimentConfig cfg;
        cfg.model_name = "duffing_forced";
        cfg.t1 = 5.0;
        cfg.sample_dt = 0.1;
        std::ostringstream out;
        cfg.out_dir = a.str();
        REQUIRE(run_run(cfg, out) == 0);
        cfg.out_dir = b.str();
        REQUIRE(run_run(cfg, out) == 0);
        if (slurp(a.path / "trajectory.csv") != slurp(b.path / "trajectory.csv"))
            failures.push_back("trajectory.csv differs between identical runs");
        if (slurp(a.path / "moments.csv") != slurp(b.path / "moments.csv"))
            failures.push_back("moments.csv differs between identical runs");
    }
    {
        ScratchDir a("cmp_a"), b("cmp_b");
        ExperimentConfig cfg;
        cfg.model_name = "duffing_uncertain_ic";
        cfg.n_mc = 100;
        cfg.t1 = 5.0;
        cfg.sample_dt = 0.5;
        cfg.seed = kSeed;
        std::ostringstream out;
        cfg.out_dir = a.str();
        REQUIRE(run_compare_mc(cfg, out) == 0);
        cfg.out_dir = b.str();
        REQUIRE(run_compare_mc(cfg, out) == 0);
        if (slurp(a.path / "compare_mc.csv") != slurp(b.path / "compare_mc.csv"))
            failures.push_back("compare_mc.csv differs between identical seeded runs");
    }

    // Independent seeds agree to within sampling error.
    const int n = 400;
    const ModelSpec model = make_model("duffing_uncertain_ic");
    IntegratorConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 10.0;
    const std::vector<double> grid = detail::time_grid(0.0, 10.0, 0.5);
    const EnsembleStats s1 = monte_carlo(model, cfg, n, kSeed, grid);
    const EnsembleStats s2 = monte_carlo(model, cfg, n, 777u, grid);
    const double root_n = std::sqrt(static_cast<double>(n));
    for (std::size_t ti = 0; ti < grid.size(); ++ti)
        for (std::size_t c = 0; c < 2; ++c) {
            const double gap = std::fabs(s1.mean[ti][c] - s2.mean[ti][c]);
            const double tol = 4.0 * (s1.stddev[ti][c] + s2.stddev[ti][c]) / root_n + 1e-12;
            if (!(gap <= tol))
                failures.push_back("seed disagreement at t = " + format_double(grid[ti]) +
                                   " coord " + std::to_string(c) + ": gap " +
                                   format_double(gap) + " > " + format_double(tol));
        }
    report(8, "identical configs reproduce bytes; fresh seeds agree within 4 std/sqrt(N)",
           failures);
    REQUIRE(failures.empty());
}
