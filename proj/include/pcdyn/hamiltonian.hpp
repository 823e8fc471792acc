#pragma once

// Average Hamiltonian of a chaos-expanded conservative system, and numerical
// verification that the projected equations are its canonical flow.
//
// For H(q, p; lambda) and expansions q_i = sum_s Q_is psi_s(lambda), the
// average Hamiltonian is Hbar(Q, P) = E_lambda[H(q(lambda), p(lambda); lambda)].
// The projected coefficient equations satisfy dQ_is/dt = dHbar/dP_is and
// dP_is/dt = -dHbar/dQ_is; this holds at every truncation order.  The check
// below tests exactly that with central finite differences, so it is
// independent of how the projected right-hand side was derived.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pcdyn/basis.hpp"
#include "pcdyn/galerkin.hpp"
#include "pcdyn/models.hpp"
#include "pcdyn/rng.hpp"

namespace pcdyn {

class AverageHamiltonian {
public:
    AverageHamiltonian(const HamiltonianSpec& ham, const BasisFamily& family, int base_dim,
                       int order)
        : ham_(ham), base_dim_(base_dim), order_(order) {
        int degree = 0;
        for (const auto& t : ham.terms) {
            int state_deg = 0;
            for (const auto& [var, e] : t.exponents) state_deg += e;
            degree = std::max(degree, t.lambda_power + state_deg * order);
        }
        rule_ = gauss_rule(family.kind, nodes_for_degree(degree));
        const BasisFamily eval_family{family.kind, order};
        std::vector<double> psi;
        psi_at_nodes_.resize(rule_.nodes.size() * static_cast<std::size_t>(order + 1));
        for (std::size_t q = 0; q < rule_.nodes.size(); ++q) {
            eval_basis_all(eval_family, order, rule_.nodes[q], psi);
            for (int k = 0; k <= order; ++k)
                psi_at_nodes_[q * static_cast<std::size_t>(order + 1) + static_cast<std::size_t>(k)] =
                    psi[static_cast<std::size_t>(k)];
        }
    }

    int expanded_dim() const { return base_dim_ * (order_ + 1); }

    // Hbar(X) by quadrature exact for the integrand degree.
    double evaluate(std::span<const double> X) const {
        thread_local std::vector<double> x_node;
        x_node.resize(static_cast<std::size_t>(base_dim_));
        double sum = 0.0;
        for (std::size_t q = 0; q < rule_.nodes.size(); ++q) {
            const double* psi = &psi_at_nodes_[q * static_cast<std::size_t>(order_ + 1)];
            for (int i = 0; i < base_dim_; ++i) {
                double xi = 0.0;
                for (int s = 0; s <= order_; ++s)
                    xi += X[static_cast<std::size_t>(s * base_dim_ + i)] * psi[s];
                x_node[static_cast<std::size_t>(i)] = xi;
            }
            sum += rule_.weights[q] * eval_hamiltonian(ham_, rule_.nodes[q], x_node);
        }
        return sum;
    }

private:
    HamiltonianSpec ham_;
    int base_dim_;
    int order_;
    QuadratureRule rule_;
    std::vector<double> psi_at_nodes_;
};

inline AverageHamiltonian make_average_hamiltonian(const ModelSpec& model,
                                                   const GalerkinSystem& sys) {
    if (!model.hamiltonian)
        throw std::invalid_argument("model '" + model.name + "' has no Hamiltonian");
    return AverageHamiltonian(*model.hamiltonian, sys.family, sys.base_dim, sys.order);
}

struct StructureCheck {
    double max_residual = 0.0;      // worst |dHbar/dP - dQ/dt| or |dHbar/dQ + dP/dt|
    double max_divergence = 0.0;    // worst |trace of Jacobian|
    int samples = 0;
};

// Trace of the analytic Jacobian: the phase-space divergence of the flow.
inline double divergence(const GalerkinSystem& sys, double t, std::span<const double> X) {
    thread_local Matrix J;
    sys.jacobian(t, X, J);
    double tr = 0.0;
    for (int i = 0; i < sys.expanded_dim; ++i)
        tr += J(static_cast<std::size_t>(i), static_cast<std::size_t>(i));
    return tr;
}

// Verify canonical structure at random coefficient states drawn uniformly
// from [-box, box]^dim: central finite differences of Hbar against the
// projected right-hand side, plus the divergence of the flow.
inline StructureCheck check_hamiltonian_structure(const AverageHamiltonian& avg,
                                                  const GalerkinSystem& sys, int n_samples = 100,
                                                  double fd_step = 1e-5, double box = 2.0,
                                                  std::uint64_t seed = 20240901u) {
    if (sys.canonical_pairs.empty())
        throw std::invalid_argument("check_hamiltonian_structure: system has no canonical pairs");
    if (avg.expanded_dim() != sys.expanded_dim)
        throw std::invalid_argument("check_hamiltonian_structure: dimension mismatch");

    StructureCheck result;
    result.samples = n_samples;
    RandomStream stream(seed);
    const std::size_t d = static_cast<std::size_t>(sys.expanded_dim);
    std::vector<double> X(d), f(d);
    for (int sample = 0; sample < n_samples; ++sample) {
        for (auto& xi : X) xi = stream.uniform(-box, box);
        sys.rhs(0.0, X, f);

        auto fd_partial = [&](int index) {
            const double saved = X[static_cast<std::size_t>(index)];
            X[static_cast<std::size_t>(index)] = saved + fd_step;
            const double hp = avg.evaluate(X);
            X[static_cast<std::size_t>(index)] = saved - fd_step;
            const double hm = avg.evaluate(X);
            X[static_cast<std::size_t>(index)] = saved;
            return (hp - hm) / (2.0 * fd_step);
        };

        for (const auto& [qi, pi] : sys.canonical_pairs) {
            for (int s = 0; s <= sys.order; ++s) {
                const int q_index = sys.flat_index(qi, s);
                const int p_index = sys.flat_index(pi, s);
                const double r1 = std::fabs(fd_partial(p_index) - f[static_cast<std::size_t>(q_index)]);
                const double r2 = std::fabs(fd_partial(q_index) + f[static_cast<std::size_t>(p_index)]);
                result.max_residual = std::max({result.max_residual, r1, r2});
            }
        }
        result.max_divergence = std::max(result.max_divergence, std::fabs(divergence(sys, 0.0, X)));
    }
    return result;
}

}  // namespace pcdyn
