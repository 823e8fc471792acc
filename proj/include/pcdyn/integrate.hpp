#pragma once

// Time integration.  Three methods:
//
//   rk45_adaptive   Dormand-Prince 5(4) embedded pair with PI-free step
//                   control (safety 0.9, step factors clamped to [0.2, 5]).
//   rk4_fixed       classic fourth-order Runge-Kutta at fixed step.
//   stormer_verlet  kick-drift-kick leapfrog for separable canonical
//                   systems; symplectic, so it tracks energy over very long
//                   horizons where one-step methods drift.
//
// Output samples, when requested, are hit by stepping exactly onto each
// sample time (never by interpolation), which makes stroboscopic sections
// bit-reproducible.  When no sample times are given every accepted step is
// recorded.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcdyn/galerkin.hpp"
#include "pcdyn/linalg.hpp"

namespace pcdyn {

enum class Method { rk45_adaptive, rk4_fixed, stormer_verlet };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::rk45_adaptive: return "rk45_adaptive";
        case Method::rk4_fixed: return "rk4_fixed";
        default: return "stormer_verlet";
    }
}

inline Method method_from_string(const std::string& name) {
    if (name == "rk45_adaptive") return Method::rk45_adaptive;
    if (name == "rk4_fixed") return Method::rk4_fixed;
    if (name == "stormer_verlet") return Method::stormer_verlet;
    throw std::invalid_argument("unknown integration method: " + name);
}

struct IntegratorConfig {
    Method method = Method::rk45_adaptive;
    double rtol = 1e-6;
    double atol = 1e-9;
    double h = 0.01;  // fixed-step size
    double t0 = 0.0;
    double t1 = 0.0;
    std::vector<double> sample_times;  // strictly increasing, inside [t0, t1]
    double max_step = std::numeric_limits<double>::infinity();
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t)
        : std::runtime_error(what + " at t=" + std::to_string(t)), t_fail(t) {}
    double t_fail;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    long n_rhs_evaluations = 0;
    long n_steps = 0;
    long n_rejected_steps = 0;

    const std::vector<double>& terminal() const { return states.back(); }
};

namespace detail {

inline void check_finite(std::span<const double> y, double t) {
    for (double v : y)
        if (!std::isfinite(v)) throw IntegrationError("non-finite state", t);
}

inline void validate_samples(const IntegratorConfig& cfg) {
    const double lo = std::min(cfg.t0, cfg.t1), hi = std::max(cfg.t0, cfg.t1);
    double prev = -std::numeric_limits<double>::infinity();
    for (double s : cfg.sample_times) {
        if (s <= prev) throw std::invalid_argument("sample_times must be strictly increasing");
        if (s < lo - 1e-12 || s > hi + 1e-12)
            throw std::invalid_argument("sample time outside integration span");
        prev = s;
    }
}

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 5th-order minus embedded 4th-order weights.
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

// Generic right-hand-side signature: rhs(t, x, dxdt).
using RhsFunction = std::function<void(double, std::span<const double>, std::span<double>)>;

// Adaptive Dormand-Prince 5(4).  FSAL: the seventh stage of an accepted step
// seeds the next step, so an accepted step costs six evaluations.
inline Trajectory integrate_rk45(const RhsFunction& rhs, std::size_t dim,
                                 const IntegratorConfig& cfg, std::span<const double> x0) {
    if (!(cfg.t1 > cfg.t0)) throw std::invalid_argument("rk45: need t1 > t0");
    if (!(cfg.rtol > 0.0) || !(cfg.atol >= 0.0)) throw std::invalid_argument("rk45: bad tolerances");
    detail::validate_samples(cfg);

    Trajectory traj;
    std::vector<double> y(x0.begin(), x0.end());
    std::vector<double> y_new(dim), y_err(dim), y_stage(dim);
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);

    double t = cfg.t0;
    auto eval = [&](double tt, std::span<const double> yy, std::span<double> out) {
        rhs(tt, yy, out);
        ++traj.n_rhs_evaluations;
    };

    std::size_t sample_idx = 0;
    const bool sampled = !cfg.sample_times.empty();
    auto record = [&](double tt, const std::vector<double>& yy) {
        traj.times.push_back(tt);
        traj.states.push_back(yy);
    };
    if (sampled) {
        while (sample_idx < cfg.sample_times.size() &&
               cfg.sample_times[sample_idx] <= cfg.t0 + 1e-14 * std::max(1.0, std::fabs(cfg.t0))) {
            record(cfg.t0, y);
            ++sample_idx;
        }
    } else {
        record(t, y);
    }

    eval(t, y, k1);
    detail::check_finite(k1, t);

    // Initial step size: standard two-probe heuristic.
    double h;
    {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double sc = cfg.atol + cfg.rtol * std::fabs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / static_cast<double>(dim));
        d1 = std::sqrt(d1 / static_cast<double>(dim));
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, cfg.t1 - cfg.t0);
        for (std::size_t i = 0; i < dim; ++i) y_stage[i] = y[i] + h0 * k1[i];
        eval(t + h0, y_stage, k2);
        double d2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double sc = cfg.atol + cfg.rtol * std::fabs(y[i]);
            d2 += ((k2[i] - k1[i]) / sc) * ((k2[i] - k1[i]) / sc);
        }
        d2 = std::sqrt(d2 / static_cast<double>(dim)) / h0;
        const double d_max = std::max(d1, d2);
        const double h1 = d_max <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                         : std::pow(0.01 / d_max, 1.0 / 5.0);
        h = std::min({100.0 * h0, h1, cfg.t1 - cfg.t0, cfg.max_step});
    }

    const double t_end = cfg.t1;
    while (t < t_end - 1e-14 * std::max(1.0, std::fabs(t_end))) {
        if (sampled && sample_idx >= cfg.sample_times.size()) break;
        double target = t_end;
        if (sampled) target = cfg.sample_times[sample_idx];

        bool hit_target = false;
        double h_step = std::min(h, cfg.max_step);
        if (t + h_step >= target - 1e-14 * std::max(1.0, std::fabs(target))) {
            h_step = target - t;
            hit_target = true;
        }
        if (h_step < 1e-14 * std::max(1.0, std::fabs(t)))
            throw IntegrationError("step size underflow", t);

        // Stages.
        for (std::size_t i = 0; i < dim; ++i) y_stage[i] = y[i] + h_step * detail::Dopri5::a21 * k1[i];
        eval(t + detail::Dopri5::c2 * h_step, y_stage, k2);
        for (std::size_t i = 0; i < dim; ++i)
            y_stage[i] = y[i] + h_step * (detail::Dopri5::a31 * k1[i] + detail::Dopri5::a32 * k2[i]);
        eval(t + detail::Dopri5::c3 * h_step, y_stage, k3);
        for (std::size_t i = 0; i < dim; ++i)
            y_stage[i] = y[i] + h_step * (detail::Dopri5::a41 * k1[i] + detail::Dopri5::a42 * k2[i] +
                                          detail::Dopri5::a43 * k3[i]);
        eval(t + detail::Dopri5::c4 * h_step, y_stage, k4);
        for (std::size_t i = 0; i < dim; ++i)
            y_stage[i] = y[i] + h_step * (detail::Dopri5::a51 * k1[i] + detail::Dopri5::a52 * k2[i] +
                                          detail::Dopri5::a53 * k3[i] + detail::Dopri5::a54 * k4[i]);
        eval(t + detail::Dopri5::c5 * h_step, y_stage, k5);
        for (std::size_t i = 0; i < dim; ++i)
            y_stage[i] = y[i] + h_step * (detail::Dopri5::a61 * k1[i] + detail::Dopri5::a62 * k2[i] +
                                          detail::Dopri5::a63 * k3[i] + detail::Dopri5::a64 * k4[i] +
                                          detail::Dopri5::a65 * k5[i]);
        eval(t + h_step, y_stage, k6);
        for (std::size_t i = 0; i < dim; ++i)
            y_new[i] = y[i] + h_step * (detail::Dopri5::b1 * k1[i] + detail::Dopri5::b3 * k3[i] +
                                        detail::Dopri5::b4 * k4[i] + detail::Dopri5::b5 * k5[i] +
                                        detail::Dopri5::b6 * k6[i]);
        const double t_new = hit_target ? target : t + h_step;
        eval(t_new, y_new, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double e = h_step * (detail::Dopri5::e1 * k1[i] + detail::Dopri5::e3 * k3[i] +
                                       detail::Dopri5::e4 * k4[i] + detail::Dopri5::e5 * k5[i] +
                                       detail::Dopri5::e6 * k6[i] + detail::Dopri5::e7 * k7[i]);
            const double sc = cfg.atol + cfg.rtol * std::max(std::fabs(y[i]), std::fabs(y_new[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(dim));

        if (!std::isfinite(err)) {
            detail::check_finite(y_new, t_new);
            throw IntegrationError("non-finite error estimate", t_new);
        }

        if (err <= 1.0) {
            t = t_new;
            y.swap(y_new);
            k1.swap(k7);  // FSAL
            ++traj.n_steps;
            detail::check_finite(y, t);
            if (sampled) {
                if (hit_target) {
                    record(t, y);
                    ++sample_idx;
                }
            } else {
                record(t, y);
            }
            const double factor = std::clamp(0.9 * std::pow(err > 0 ? err : 1e-10, -0.2), 0.2, 5.0);
            h = std::min(h_step * factor, cfg.max_step);
        } else {
            ++traj.n_rejected_steps;
            const double factor = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            h = h_step * factor;
        }
    }
    if (!sampled && (traj.times.empty() || traj.times.back() < t)) record(t, y);
    return traj;
}

// Classic RK4 at fixed step; the step shortens only to land exactly on
// sample times and on t1.  Handles backward integration (t1 < t0).
inline Trajectory integrate_rk4(const RhsFunction& rhs, std::size_t dim,
                                const IntegratorConfig& cfg, std::span<const double> x0) {
    if (cfg.t1 == cfg.t0) throw std::invalid_argument("rk4: empty time span");
    if (!(cfg.h > 0.0)) throw std::invalid_argument("rk4: step size must be positive");
    detail::validate_samples(cfg);

    const double dir = cfg.t1 > cfg.t0 ? 1.0 : -1.0;
    Trajectory traj;
    std::vector<double> y(x0.begin(), x0.end());
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), y_stage(dim);
    double t = cfg.t0;

    auto eval = [&](double tt, std::span<const double> yy, std::span<double> out) {
        rhs(tt, yy, out);
        ++traj.n_rhs_evaluations;
    };
    const bool sampled = !cfg.sample_times.empty();
    std::size_t sample_idx = 0;
    auto record = [&](double tt, const std::vector<double>& yy) {
        traj.times.push_back(tt);
        traj.states.push_back(yy);
    };
    if (sampled) {
        while (sample_idx < cfg.sample_times.size() &&
               dir * (cfg.sample_times[sample_idx] - cfg.t0) <= 1e-14) {
            record(cfg.t0, y);
            ++sample_idx;
        }
    } else {
        record(t, y);
    }

    while (dir * (cfg.t1 - t) > 1e-14 * std::max(1.0, std::fabs(cfg.t1))) {
        double target = cfg.t1;
        if (sampled && sample_idx < cfg.sample_times.size()) target = cfg.sample_times[sample_idx];
        double h_step = dir * cfg.h;
        bool hit_target = false;
        if (dir * (t + h_step - target) >= -1e-14 * std::max(1.0, std::fabs(target))) {
            h_step = target - t;
            hit_target = true;
        }

        eval(t, y, k1);
        for (std::size_t i = 0; i < dim; ++i) y_stage[i] = y[i] + 0.5 * h_step * k1[i];
        eval(t + 0.5 * h_step, y_stage, k2);
        for (std::size_t i = 0; i < dim; ++i) y_stage[i] = y[i] + 0.5 * h_step * k2[i];
        eval(t + 0.5 * h_step, y_stage, k3);
        for (std::size_t i = 0; i < dim; ++i) y_stage[i] = y[i] + h_step * k3[i];
        eval(t + h_step, y_stage, k4);
        for (std::size_t i = 0; i < dim; ++i)
            y[i] += h_step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t = hit_target ? target : t + h_step;
        ++traj.n_steps;
        detail::check_finite(y, t);
        if (sampled) {
            if (hit_target && sample_idx < cfg.sample_times.size() &&
                target == cfg.sample_times[sample_idx]) {
                record(t, y);
                ++sample_idx;
            }
            if (sample_idx >= cfg.sample_times.size()) break;
        } else {
            record(t, y);
        }
    }
    return traj;
}

inline RhsFunction system_rhs(const GalerkinSystem& sys) {
    return [&sys](double t, std::span<const double> x, std::span<double> dxdt) {
        sys.rhs(t, x, dxdt);
    };
}

// Dispatch on configured method for non-symplectic integration.
inline Trajectory integrate(const RhsFunction& rhs, std::size_t dim, const IntegratorConfig& cfg,
                            std::span<const double> x0) {
    switch (cfg.method) {
        case Method::rk45_adaptive: return integrate_rk45(rhs, dim, cfg, x0);
        case Method::rk4_fixed: return integrate_rk4(rhs, dim, cfg, x0);
        default:
            throw std::invalid_argument("integrate: stormer_verlet requires integrate_symplectic");
    }
}

inline Trajectory integrate(const GalerkinSystem& sys, const IntegratorConfig& cfg,
                            std::span<const double> x0) {
    return integrate(system_rhs(sys), static_cast<std::size_t>(sys.expanded_dim), cfg, x0);
}

// Störmer-Verlet leapfrog for separable canonical coefficient systems:
// half kick, full drift, half kick.  Forcing terms are allowed in the
// momentum rows (a time-dependent potential); anything that couples
// momenta into their own derivatives (damping) is rejected, as is a
// coordinate row depending on coordinates.
inline Trajectory integrate_symplectic(const GalerkinSystem& sys, const IntegratorConfig& cfg,
                                       std::span<const double> x0) {
    if (sys.canonical_pairs.empty())
        throw std::invalid_argument("integrate_symplectic: system has no canonical structure");
    if (cfg.t1 == cfg.t0) throw std::invalid_argument("integrate_symplectic: empty time span");
    if (!(cfg.h > 0.0)) throw std::invalid_argument("integrate_symplectic: step size must be positive");
    detail::validate_samples(cfg);

    const std::size_t d = static_cast<std::size_t>(sys.expanded_dim);
    std::vector<bool> is_q(d, false), is_p(d, false);
    std::vector<int> q_rows, p_rows;
    for (const auto& [qi, pi] : sys.canonical_pairs) {
        for (int s = 0; s <= sys.order; ++s) {
            const int qr = sys.flat_index(qi, s), pr = sys.flat_index(pi, s);
            is_q[static_cast<std::size_t>(qr)] = true;
            is_p[static_cast<std::size_t>(pr)] = true;
            q_rows.push_back(qr);
            p_rows.push_back(pr);
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        if (!is_q[i] && !is_p[i])
            throw std::invalid_argument("integrate_symplectic: canonical pairs do not cover the state");
    for (const auto& term : sys.terms) {
        const bool target_q = is_q[static_cast<std::size_t>(term.target)];
        if (target_q && term.forcing != Forcing::none)
            throw std::invalid_argument("integrate_symplectic: time-dependent coordinate row");
        for (const auto& [var, e] : term.exponents) {
            const bool var_q = is_q[static_cast<std::size_t>(var)];
            if (target_q == var_q)
                throw std::invalid_argument(
                    "integrate_symplectic: system is not separable (row " +
                    std::to_string(term.target) + " depends on variable " + std::to_string(var) + ")");
        }
    }

    Trajectory traj;
    std::vector<double> y(x0.begin(), x0.end());
    std::vector<double> f(d);
    double t = cfg.t0;
    const double dir = cfg.t1 > cfg.t0 ? 1.0 : -1.0;

    auto eval = [&](double tt, std::span<const double> yy) {
        sys.rhs(tt, yy, f);
        ++traj.n_rhs_evaluations;
    };
    const bool sampled = !cfg.sample_times.empty();
    std::size_t sample_idx = 0;
    auto record = [&](double tt, const std::vector<double>& yy) {
        traj.times.push_back(tt);
        traj.states.push_back(yy);
    };
    if (sampled) {
        while (sample_idx < cfg.sample_times.size() &&
               dir * (cfg.sample_times[sample_idx] - cfg.t0) <= 1e-14) {
            record(cfg.t0, y);
            ++sample_idx;
        }
    } else {
        record(t, y);
    }

    eval(t, y);  // seed kick force; momentum rows only depend on coordinates
    std::vector<double> force(d);
    for (int pr : p_rows) force[static_cast<std::size_t>(pr)] = f[static_cast<std::size_t>(pr)];

    while (dir * (cfg.t1 - t) > 1e-14 * std::max(1.0, std::fabs(cfg.t1))) {
        double target = cfg.t1;
        if (sampled && sample_idx < cfg.sample_times.size()) target = cfg.sample_times[sample_idx];
        double h_step = dir * cfg.h;
        bool hit_target = false;
        if (dir * (t + h_step - target) >= -1e-14 * std::max(1.0, std::fabs(target))) {
            h_step = target - t;
            hit_target = true;
        }

        // Half kick.
        for (int pr : p_rows)
            y[static_cast<std::size_t>(pr)] += 0.5 * h_step * force[static_cast<std::size_t>(pr)];
        // Full drift: coordinate rows depend only on momenta.
        eval(t + 0.5 * h_step, y);
        for (int qr : q_rows) y[static_cast<std::size_t>(qr)] += h_step * f[static_cast<std::size_t>(qr)];
        const double t_new = hit_target ? target : t + h_step;
        // Half kick with the new coordinates; reuse the force next step.
        eval(t_new, y);
        for (int pr : p_rows) {
            force[static_cast<std::size_t>(pr)] = f[static_cast<std::size_t>(pr)];
            y[static_cast<std::size_t>(pr)] += 0.5 * h_step * force[static_cast<std::size_t>(pr)];
        }
        t = t_new;
        ++traj.n_steps;
        detail::check_finite(y, t);
        if (sampled) {
            if (hit_target && sample_idx < cfg.sample_times.size() &&
                target == cfg.sample_times[sample_idx]) {
                record(t, y);
                ++sample_idx;
            }
            if (sample_idx >= cfg.sample_times.size()) break;
        } else {
            record(t, y);
        }
    }
    return traj;
}

// Tangent/variational flow: integrates x' = f(x, t) together with
// M' = J(x, t) M for an initial matrix M0 (dim x n_cols), using the
// analytic Jacobian.  Packed state layout: [x, M row-major].
struct VariationalResult {
    Trajectory trajectory;  // packed states
    int dim = 0;
    int n_cols = 0;

    std::vector<double> state_at(std::size_t row) const {
        const auto& y = trajectory.states[row];
        return std::vector<double>(y.begin(), y.begin() + dim);
    }
    Matrix matrix_at(std::size_t row) const {
        const auto& y = trajectory.states[row];
        Matrix m(static_cast<std::size_t>(dim), static_cast<std::size_t>(n_cols));
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < n_cols; ++j)
                m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    y[static_cast<std::size_t>(dim + i * n_cols + j)];
        return m;
    }
};

inline VariationalResult integrate_variational(const GalerkinSystem& sys,
                                               const IntegratorConfig& cfg,
                                               std::span<const double> x0, const Matrix& m0) {
    const int d = sys.expanded_dim;
    if (m0.rows() != static_cast<std::size_t>(d))
        throw std::invalid_argument("integrate_variational: matrix row count must equal state dim");
    const int k = static_cast<int>(m0.cols());
    const std::size_t packed = static_cast<std::size_t>(d) * static_cast<std::size_t>(1 + k);

    std::vector<double> y0(packed);
    std::copy(x0.begin(), x0.end(), y0.begin());
    std::copy(m0.data(), m0.data() + static_cast<std::size_t>(d) * static_cast<std::size_t>(k),
              y0.begin() + d);

    RhsFunction packed_rhs = [&sys, d, k](double t, std::span<const double> y,
                                          std::span<double> dydt) {
        thread_local Matrix J;
        sys.rhs(t, y.subspan(0, static_cast<std::size_t>(d)),
                dydt.subspan(0, static_cast<std::size_t>(d)));
        sys.jacobian(t, y.subspan(0, static_cast<std::size_t>(d)), J);
        const double* M = y.data() + d;
        double* dM = dydt.data() + d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < k; ++j) {
                double acc = 0.0;
                for (int l = 0; l < d; ++l)
                    acc += J(static_cast<std::size_t>(i), static_cast<std::size_t>(l)) *
                           M[l * k + j];
                dM[i * k + j] = acc;
            }
    };

    VariationalResult out;
    out.dim = d;
    out.n_cols = k;
    IntegratorConfig vcfg = cfg;
    if (vcfg.method == Method::stormer_verlet)
        throw std::invalid_argument("integrate_variational: use rk45_adaptive or rk4_fixed");
    out.trajectory = integrate(packed_rhs, packed, vcfg, y0);
    return out;
}

}  // namespace pcdyn
