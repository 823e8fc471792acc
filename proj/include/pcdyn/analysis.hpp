#pragma once

// Trajectory diagnostics: stroboscopic Poincare sections, largest Lyapunov
// exponents via the tangent flow with periodic renormalization, Monte Carlo
// reference ensembles with order-independent per-sample random streams, and
// moment-error series against such ensembles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pcdyn/galerkin.hpp"
#include "pcdyn/hamiltonian.hpp"
#include "pcdyn/integrate.hpp"
#include "pcdyn/models.hpp"
#include "pcdyn/rng.hpp"

namespace pcdyn {

struct PoincareSection {
    double omega = 0.0;
    double phase = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> points;  // full expanded states at section times
    long n_rhs_evaluations = 0;
};

// Stroboscopic section of a periodically forced system: states at
// t_n = (2 pi n + phase) / omega for n = 0 .. n_points-1.  The integrator
// steps exactly onto each section time.
inline PoincareSection poincare(const GalerkinSystem& sys, const IntegratorConfig& base_cfg,
                                std::span<const double> x0, double omega, double phase,
                                int n_points) {
    if (!(omega > 0.0)) throw std::invalid_argument("poincare: omega must be positive");
    if (n_points < 0) throw std::invalid_argument("poincare: negative point count");
    PoincareSection section;
    section.omega = omega;
    section.phase = phase;
    if (n_points == 0) return section;

    IntegratorConfig cfg = base_cfg;
    cfg.sample_times.resize(static_cast<std::size_t>(n_points));
    for (int n = 0; n < n_points; ++n)
        cfg.sample_times[static_cast<std::size_t>(n)] =
            (2.0 * std::numbers::pi * n + phase) / omega;
    cfg.t0 = 0.0;
    cfg.t1 = cfg.sample_times.back();
    if (cfg.t1 == cfg.t0) cfg.t1 = cfg.t0 + 1.0;  // single point at t0

    if (cfg.sample_times.front() == 0.0 && n_points == 1) {
        section.times = {0.0};
        section.points = {std::vector<double>(x0.begin(), x0.end())};
        return section;
    }
    Trajectory traj = integrate(sys, cfg, x0);
    section.times = traj.times;
    section.points = traj.states;
    section.n_rhs_evaluations = traj.n_rhs_evaluations;
    return section;
}

struct LyapunovEstimate {
    double exponent = 0.0;
    double horizon = 0.0;
    double transient = 0.0;
    double renorm_dt = 0.0;
    std::vector<double> convergence_times;
    std::vector<double> convergence;  // running estimate after each renormalization
    long n_rhs_evaluations = 0;
};

// Largest Lyapunov exponent: evolve state plus one tangent vector with the
// analytic-Jacobian variational flow, renormalizing the tangent every
// renorm_dt and averaging log growth after an initial transient.  The
// tangent is evolved (and renormalized) through the transient as well so it
// aligns with the dominant direction, but those log norms are discarded.
// Time-dependent forcing needs no extra state here: the phase variable that
// would formally augment the system has zero tangent component and drops
// out of the growth norm.
inline LyapunovEstimate largest_lyapunov(const GalerkinSystem& sys, const IntegratorConfig& base_cfg,
                                         std::span<const double> x0, double horizon,
                                         double renorm_dt = 1.0, double transient = -1.0,
                                         std::span<const double> tangent0 = {}) {
    if (!(horizon > 0.0)) throw std::invalid_argument("largest_lyapunov: horizon must be positive");
    if (!(renorm_dt > 0.0)) throw std::invalid_argument("largest_lyapunov: renorm_dt must be positive");
    if (transient < 0.0) transient = 0.05 * horizon;
    if (transient >= horizon)
        throw std::invalid_argument("largest_lyapunov: transient must be shorter than the horizon");

    const std::size_t d = static_cast<std::size_t>(sys.expanded_dim);
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> v(d, 0.0);
    if (!tangent0.empty()) {
        if (tangent0.size() != d)
            throw std::invalid_argument("largest_lyapunov: tangent dimension mismatch");
        std::copy(tangent0.begin(), tangent0.end(), v.begin());
    } else {
        v[0] = 1.0;
    }
    double norm0 = 0.0;
    for (double vi : v) norm0 += vi * vi;
    norm0 = std::sqrt(norm0);
    if (!(norm0 > 0.0)) throw std::invalid_argument("largest_lyapunov: zero initial tangent");
    for (auto& vi : v) vi /= norm0;

    LyapunovEstimate est;
    est.horizon = horizon;
    est.transient = transient;
    est.renorm_dt = renorm_dt;

    IntegratorConfig cfg = base_cfg;
    cfg.sample_times.clear();

    double t = 0.0;
    double log_sum = 0.0;
    double measured_time = 0.0;
    Matrix m0(d, 1);
    while (t < horizon - 1e-9) {
        const double t_next = std::min(t + renorm_dt, horizon);
        cfg.t0 = t;
        cfg.t1 = t_next;
        for (std::size_t i = 0; i < d; ++i) m0(i, 0) = v[i];
        VariationalResult res = integrate_variational(sys, cfg, x, m0);
        est.n_rhs_evaluations += res.trajectory.n_rhs_evaluations;
        x = res.state_at(res.trajectory.states.size() - 1);
        const Matrix m_end = res.matrix_at(res.trajectory.states.size() - 1);
        double norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) norm += m_end(i, 0) * m_end(i, 0);
        norm = std::sqrt(norm);
        if (!(norm > 0.0)) throw IntegrationError("tangent vector collapsed", t_next);
        for (std::size_t i = 0; i < d; ++i) v[i] = m_end(i, 0) / norm;

        if (t_next > transient + 1e-12) {
            const double seg_start = std::max(t, transient);
            if (t < transient) {
                // Segment straddles the transient boundary: attribute growth
                // proportionally (segments are short, growth is smooth).
                const double frac = (t_next - transient) / (t_next - t);
                log_sum += frac * std::log(norm);
            } else {
                log_sum += std::log(norm);
            }
            measured_time += t_next - seg_start;
            est.convergence_times.push_back(t_next);
            est.convergence.push_back(log_sum / measured_time);
        }
        t = t_next;
    }
    est.exponent = log_sum / measured_time;
    return est;
}

struct EnsembleStats {
    std::vector<double> times;
    std::vector<std::vector<double>> mean;  // [time][coord]
    std::vector<std::vector<double>> stddev;
    int n_samples = 0;
    std::uint64_t seed = 0;
    long n_rhs_evaluations = 0;
};

// Monte Carlo reference: N samples of the uncertain input, each integrated
// deterministically on the shared sample-time grid.  Sample i draws from a
// stream derived from (seed, i) alone, so the ensemble is reproducible and
// independent of evaluation order.
inline EnsembleStats monte_carlo(const ModelSpec& model, const IntegratorConfig& base_cfg,
                                 int n_samples, std::uint64_t seed,
                                 const std::vector<double>& sample_times) {
    if (n_samples < 1) throw std::invalid_argument("monte_carlo: need at least one sample");
    if (sample_times.empty()) throw std::invalid_argument("monte_carlo: need sample times");

    EnsembleStats stats;
    stats.times = sample_times;
    stats.n_samples = n_samples;
    stats.seed = seed;
    const std::size_t n_t = sample_times.size();
    const std::size_t dim = static_cast<std::size_t>(model.field.dim);
    std::vector<std::vector<double>> sum(n_t, std::vector<double>(dim, 0.0));
    std::vector<std::vector<double>> sum_sq(n_t, std::vector<double>(dim, 0.0));

    IntegratorConfig cfg = base_cfg;
    cfg.sample_times = sample_times;
    cfg.t0 = std::min(cfg.t0, sample_times.front());
    cfg.t1 = sample_times.back();

    for (int i = 0; i < n_samples; ++i) {
        RandomStream stream = RandomStream::for_sample(seed, static_cast<std::uint64_t>(i));
        const double lambda_value = sample_standardized(model, stream);
        const PolynomialVectorField sampled_field =
            model.uncertain.kind == UncertaintyDescriptor::Kind::parameter
                ? substitute_parameter(model.field, lambda_value)
                : model.field;
        const std::vector<double> ic = sampled_initial(model, lambda_value);
        RhsFunction rhs = [&sampled_field](double t, std::span<const double> x,
                                           std::span<double> dxdt) {
            sampled_field.eval(0.0, t, x, dxdt);
        };
        Trajectory traj;
        try {
            traj = integrate(rhs, dim, cfg, ic);
        } catch (const IntegrationError& err) {
            throw IntegrationError("sample " + std::to_string(i) + ": " + err.what(), err.t_fail);
        }
        if (traj.times.size() != n_t)
            throw IntegrationError("sample " + std::to_string(i) + ": sampling mismatch",
                                   traj.times.empty() ? cfg.t0 : traj.times.back());
        stats.n_rhs_evaluations += traj.n_rhs_evaluations;
        for (std::size_t ti = 0; ti < n_t; ++ti)
            for (std::size_t c = 0; c < dim; ++c) {
                const double v = traj.states[ti][c];
                sum[ti][c] += v;
                sum_sq[ti][c] += v * v;
            }
    }

    stats.mean.assign(n_t, std::vector<double>(dim, 0.0));
    stats.stddev.assign(n_t, std::vector<double>(dim, 0.0));
    const double n = static_cast<double>(n_samples);
    for (std::size_t ti = 0; ti < n_t; ++ti)
        for (std::size_t c = 0; c < dim; ++c) {
            const double mean = sum[ti][c] / n;
            stats.mean[ti][c] = mean;
            if (n_samples > 1) {
                const double var = std::max(0.0, (sum_sq[ti][c] - n * mean * mean) / (n - 1.0));
                stats.stddev[ti][c] = std::sqrt(var);
            }
        }
    return stats;
}

// Chaos-coefficient moments along a trajectory, shaped like EnsembleStats
// for direct comparison.
inline EnsembleStats moments_series(const GalerkinSystem& sys, const Trajectory& traj) {
    EnsembleStats stats;
    stats.times = traj.times;
    stats.n_rhs_evaluations = traj.n_rhs_evaluations;
    stats.mean.reserve(traj.states.size());
    stats.stddev.reserve(traj.states.size());
    for (const auto& X : traj.states) {
        const Moments m = moments(sys, X);
        stats.mean.push_back(m.mean);
        std::vector<double> sd(m.variance.size());
        for (std::size_t i = 0; i < sd.size(); ++i) sd[i] = std::sqrt(m.variance[i]);
        stats.stddev.push_back(std::move(sd));
    }
    return stats;
}

struct MomentError {
    std::vector<double> times;
    std::vector<std::vector<double>> mean_error;  // [time][coord], absolute
    std::vector<std::vector<double>> std_error;
    std::optional<double> divergence_time;  // first time coord-0 mean error exceeds threshold
    double threshold = 0.0;
};

// Absolute deviations between two moment series on the same time grid, plus
// the first crossing of the coordinate-0 mean error above a threshold.
inline MomentError moment_error(const EnsembleStats& pc, const EnsembleStats& reference,
                                double threshold = 0.5) {
    if (pc.times.size() != reference.times.size())
        throw std::invalid_argument("moment_error: time grids differ in length");
    for (std::size_t i = 0; i < pc.times.size(); ++i)
        if (std::fabs(pc.times[i] - reference.times[i]) >
            1e-9 * std::max(1.0, std::fabs(reference.times[i])))
            throw std::invalid_argument("moment_error: time grids differ");

    MomentError err;
    err.times = pc.times;
    err.threshold = threshold;
    const std::size_t n_t = pc.times.size();
    err.mean_error.resize(n_t);
    err.std_error.resize(n_t);
    for (std::size_t ti = 0; ti < n_t; ++ti) {
        const std::size_t dim = std::min(pc.mean[ti].size(), reference.mean[ti].size());
        err.mean_error[ti].resize(dim);
        err.std_error[ti].resize(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            err.mean_error[ti][c] = std::fabs(pc.mean[ti][c] - reference.mean[ti][c]);
            err.std_error[ti][c] = std::fabs(pc.stddev[ti][c] - reference.stddev[ti][c]);
        }
        if (!err.divergence_time && dim > 0 && err.mean_error[ti][0] > threshold)
            err.divergence_time = pc.times[ti];
    }
    return err;
}

}  // namespace pcdyn
