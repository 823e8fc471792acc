#pragma once

// Exact chaos coefficients of the harmonic oscillator with uniformly
// distributed frequency: q'' + (omega0 + alpha*lambda)^2 q = 0, q(0) = 1,
// p(0) = 0, lambda ~ U(-1,1).  The solution q(t; lambda) = cos((omega0 +
// alpha*lambda) t) dephases across the parameter interval, so every
// projection coefficient decays like 1/t, while the projected coefficient
// system is volume preserving.  liouville_contrast measures both effects on
// one run: the truncated-system flow keeps det(Phi) = 1 even as the exact
// coefficients it is trying to follow die out, so the two trajectories must
// part ways.
//
// Coefficients are computed two independent ways:
//   * direct Gauss-Legendre projection of the exact solution (the authority),
//   * closed-form monomial coefficients of the Legendre basis combined with
//     the moments I_l(t) = integral of lambda^l cos((omega0+alpha*lambda)t),
//     which satisfy a two-step recurrence in l.
// The recurrence divides by (alpha*t)^2 and amplifies error by l(l-1)/(alpha*t)^2
// per step, so it is used only where that factor stays below one; smaller
// alpha*t falls back to quadrature.  I_0 and I_1 use cancellation-free
// closed forms.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pcdyn/basis.hpp"
#include "pcdyn/integrate.hpp"
#include "pcdyn/linalg.hpp"
#include "pcdyn/models.hpp"

namespace pcdyn {

struct HarmonicSetup {
    double omega0 = 1.0;
    double alpha = 0.25;

    void validate() const {
        if (!(omega0 > 0.0)) throw std::invalid_argument("harmonic setup: omega0 must be positive");
        if (!(alpha >= 0.0)) throw std::invalid_argument("harmonic setup: alpha must be non-negative");
    }
};

// Coefficient of lambda^l in the orthonormal Legendre polynomial psi_k:
// sqrt(2k+1) * 2^k * C(k,l) * C((k+l-1)/2, k), with the second binomial
// taken at a half-integer upper argument via its falling-factorial product
// (which also vanishes for the parity-forbidden l).
inline double legendre_monomial_coeff(int k, int l) {
    if (k < 0 || l < 0 || l > k) return 0.0;
    double binom_kl = 1.0;
    for (int j = 0; j < l; ++j) binom_kl = binom_kl * (k - j) / (j + 1);
    const double x = 0.5 * (k + l - 1);
    double binom_half = 1.0;
    for (int j = 0; j < k; ++j) binom_half = binom_half * (x - j) / (j + 1);
    return std::sqrt(2.0 * k + 1.0) * std::ldexp(1.0, k) * binom_kl * binom_half;
}

namespace detail {

inline double sinc(double u) {
    if (std::fabs(u) < 1e-4) return 1.0 - u * u / 6.0 + u * u * u * u / 120.0;
    return std::sin(u) / u;
}

// (u cos u - sin u) / u^2, stable near zero.
inline double cos_kernel(double u) {
    if (std::fabs(u) < 1e-2) {
        const double u2 = u * u;
        return u * (-1.0 / 3.0 + u2 * (1.0 / 30.0 - u2 / 840.0));
    }
    return (u * std::cos(u) - std::sin(u)) / (u * u);
}

inline int oscillatory_gl_nodes(double phase) {
    return 24 + static_cast<int>(std::ceil(0.7 * std::fabs(phase)));
}

}  // namespace detail

// Moments I_l(t) for l = 0..l_max in one batch.  See the header comment for
// the stability policy.
inline std::vector<double> cosine_power_moments(const HarmonicSetup& setup, int l_max, double t) {
    setup.validate();
    if (l_max < 0) throw std::invalid_argument("cosine_power_moments: negative order");
    if (t < 0.0) throw std::invalid_argument("cosine_power_moments: negative time");
    std::vector<double> I(static_cast<std::size_t>(l_max) + 1, 0.0);
    const double u = setup.alpha * t;
    const double w0t = setup.omega0 * t;

    I[0] = 2.0 * std::cos(w0t) * detail::sinc(u);
    if (l_max >= 1) I[1] = 2.0 * std::sin(w0t) * detail::cos_kernel(u);

    int first_quadrature = l_max + 1;
    for (int l = 2; l <= l_max; ++l) {
        if (u * u < static_cast<double>(l) * (l - 1.0)) {
            first_quadrature = l;
            break;
        }
        const double w1t = (setup.omega0 - setup.alpha) * t;
        const double w2t = (setup.omega0 + setup.alpha) * t;
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;  // (-1)^l
        I[static_cast<std::size_t>(l)] =
            (std::sin(w2t) - sign * std::sin(w1t)) / u +
            l * (std::cos(w2t) + sign * std::cos(w1t)) / (u * u) -
            l * (l - 1.0) / (u * u) * I[static_cast<std::size_t>(l) - 2];
    }
    if (first_quadrature <= l_max) {
        const QuadratureRule rule =
            gauss_rule(BasisKind::legendre_uniform, detail::oscillatory_gl_nodes(u) + l_max / 2 + 1);
        for (int l = first_quadrature; l <= l_max; ++l) {
            double acc = 0.0;
            for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
                const double lam = rule.nodes[j];
                acc += rule.weights[j] * std::pow(lam, l) *
                       std::cos((setup.omega0 + setup.alpha * lam) * t);
            }
            I[static_cast<std::size_t>(l)] = 2.0 * acc;  // rule weights embed the density 1/2
        }
    }
    return I;
}

inline double cosine_power_moment(const HarmonicSetup& setup, int l, double t) {
    return cosine_power_moments(setup, l, t)[static_cast<std::size_t>(l)];
}

struct ProjectionCoefficients {
    std::vector<double> q;  // Q_k(t), k = 0..r
    std::vector<double> p;  // P_k(t)
};

// Direct Gauss-Legendre projection of the exact solution and its velocity.
// This is the reference route: it evaluates cos((omega0+alpha*lambda)t) and
// -(omega0+alpha*lambda) sin(...) at the nodes and projects onto psi_k, with
// the node count scaled to the oscillation phase alpha*t.
inline ProjectionCoefficients exact_coefficients(const HarmonicSetup& setup, int order, double t) {
    setup.validate();
    if (order < 0) throw std::invalid_argument("exact_coefficients: negative order");
    const int n = detail::oscillatory_gl_nodes(setup.alpha * t) + order;
    const QuadratureRule rule = gauss_rule(BasisKind::legendre_uniform, n);
    const BasisFamily family{BasisKind::legendre_uniform, order};

    ProjectionCoefficients out;
    out.q.assign(static_cast<std::size_t>(order) + 1, 0.0);
    out.p.assign(static_cast<std::size_t>(order) + 1, 0.0);
    std::vector<double> psi;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double lam = rule.nodes[j];
        const double omega = setup.omega0 + setup.alpha * lam;
        const double q = std::cos(omega * t);
        const double p = -omega * std::sin(omega * t);
        eval_basis_all(family, order, lam, psi);
        for (int k = 0; k <= order; ++k) {
            out.q[static_cast<std::size_t>(k)] += rule.weights[j] * q * psi[static_cast<std::size_t>(k)];
            out.p[static_cast<std::size_t>(k)] += rule.weights[j] * p * psi[static_cast<std::size_t>(k)];
        }
    }
    return out;
}

// Q_k(t) through the closed-form basis coefficients and the I_l moments.
inline std::vector<double> recurrence_coefficients(const HarmonicSetup& setup, int order, double t) {
    const std::vector<double> I = cosine_power_moments(setup, order, t);
    std::vector<double> q(static_cast<std::size_t>(order) + 1, 0.0);
    for (int k = 0; k <= order; ++k) {
        double acc = 0.0;
        for (int l = k % 2; l <= k; l += 2)
            acc += legendre_monomial_coeff(k, l) * I[static_cast<std::size_t>(l)];
        q[static_cast<std::size_t>(k)] = 0.5 * acc;  // density 1/2
    }
    return q;
}

// Second moment of the exact solution: E[q(t)^2] = (1 + sinc(2 alpha t)
// cos(2 omega0 t)) / 2.  Upper bound for sum_k Q_k(t)^2 at any truncation.
inline double second_moment_bound(const HarmonicSetup& setup, double t) {
    return 0.5 * (1.0 + detail::sinc(2.0 * setup.alpha * t) * std::cos(2.0 * setup.omega0 * t));
}

struct LiouvilleReport {
    std::vector<double> times;
    std::vector<double> det_phi;      // flow-map volume of the truncated system
    std::vector<double> pc_norm;      // |X_PC(t)|
    std::vector<double> exact_norm;   // |X_exact(t)|
    std::vector<double> sup_exact_q;  // max_k |Q_k(t)| of the exact projection
    std::vector<double> mismatch;     // |X_PC(t) - X_exact(t)|
    std::optional<double> t_star;     // first time mismatch > 0.5 |X_PC|
    int order = 0;
    long n_rhs_evaluations = 0;
    // Per-time coefficient rows for file output: exact row = Q_0..Q_r then
    // P_0..P_r; pc row = the integrated state in flat layout.
    std::vector<std::vector<double>> exact_rows;
    std::vector<std::vector<double>> pc_rows;
};

// Integrate the truncated coefficient system together with its flow-map
// Jacobian and compare against the exact projection coefficients on a
// shared time grid.
inline LiouvilleReport liouville_contrast(const HarmonicSetup& setup, int order, double horizon,
                                          const IntegratorConfig& base_cfg, int n_points = 501) {
    setup.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("liouville_contrast: horizon must be positive");
    if (n_points < 2) throw std::invalid_argument("liouville_contrast: need at least two points");

    const ModelSpec model = make_model(
        "harmonic_uncertain_freq", {{"omega0", setup.omega0}, {"alpha", setup.alpha}});
    const GalerkinSystem sys = expand_model(model, order);
    const std::vector<double> X0 = expanded_initial(model, sys);
    const std::size_t d = static_cast<std::size_t>(sys.expanded_dim);

    IntegratorConfig cfg = base_cfg;
    cfg.t0 = 0.0;
    cfg.t1 = horizon;
    cfg.sample_times.resize(static_cast<std::size_t>(n_points) - 1);
    for (int i = 1; i < n_points; ++i)
        cfg.sample_times[static_cast<std::size_t>(i) - 1] =
            horizon * static_cast<double>(i) / (n_points - 1);

    VariationalResult res = integrate_variational(sys, cfg, X0, Matrix::identity(d));

    LiouvilleReport report;
    report.order = order;
    report.n_rhs_evaluations = res.trajectory.n_rhs_evaluations;
    report.times.push_back(0.0);
    std::vector<std::vector<double>> pc_states;
    pc_states.push_back(X0);
    std::vector<Matrix> phis;
    phis.push_back(Matrix::identity(d));
    for (std::size_t row = 0; row < res.trajectory.times.size(); ++row) {
        report.times.push_back(res.trajectory.times[row]);
        pc_states.push_back(res.state_at(row));
        phis.push_back(res.matrix_at(row));
    }

    for (std::size_t i = 0; i < report.times.size(); ++i) {
        const double t = report.times[i];
        report.det_phi.push_back(determinant(phis[i]));
        const ProjectionCoefficients exact = exact_coefficients(setup, order, t);
        double pc_sq = 0.0, exact_sq = 0.0, mis_sq = 0.0, sup_q = 0.0;
        std::vector<double> exact_row;
        for (int k = 0; k <= order; ++k) {
            const double qe = exact.q[static_cast<std::size_t>(k)];
            const double pe = exact.p[static_cast<std::size_t>(k)];
            const double qn = pc_states[i][static_cast<std::size_t>(sys.flat_index(0, k))];
            const double pn = pc_states[i][static_cast<std::size_t>(sys.flat_index(1, k))];
            pc_sq += qn * qn + pn * pn;
            exact_sq += qe * qe + pe * pe;
            mis_sq += (qn - qe) * (qn - qe) + (pn - pe) * (pn - pe);
            sup_q = std::max(sup_q, std::fabs(qe));
        }
        exact_row.insert(exact_row.end(), exact.q.begin(), exact.q.end());
        exact_row.insert(exact_row.end(), exact.p.begin(), exact.p.end());
        report.exact_rows.push_back(std::move(exact_row));
        report.pc_rows.push_back(pc_states[i]);
        report.pc_norm.push_back(std::sqrt(pc_sq));
        report.exact_norm.push_back(std::sqrt(exact_sq));
        report.mismatch.push_back(std::sqrt(mis_sq));
        report.sup_exact_q.push_back(sup_q);
        if (!report.t_star && report.mismatch.back() > 0.5 * report.pc_norm.back())
            report.t_star = t;
    }
    return report;
}

}  // namespace pcdyn
