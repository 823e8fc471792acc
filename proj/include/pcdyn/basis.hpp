#pragma once

// Orthonormal polynomial bases for a single standardized random parameter,
// plus the Gauss quadrature rules that integrate against the parameter
// density.  Two families are supported:
//
//   hermite_gaussian  psi_k = He_k / sqrt(k!)        density N(0,1) on R
//   legendre_uniform  psi_k = sqrt(2k+1) P_k         density 1/2 on [-1,1]
//
// Both satisfy E[psi_j psi_k] = delta_jk with psi_0 = 1.  Quadrature weights
// embed the density, so weights always sum to one and plain weighted sums
// are expectations.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcdyn/linalg.hpp"

namespace pcdyn {

enum class BasisKind { hermite_gaussian, legendre_uniform };

struct BasisFamily {
    BasisKind kind = BasisKind::hermite_gaussian;
    int max_order = 0;  // highest usable basis index
};

inline std::string to_string(BasisKind kind) {
    return kind == BasisKind::hermite_gaussian ? "hermite_gaussian" : "legendre_uniform";
}

inline BasisKind basis_kind_from_string(const std::string& name) {
    if (name == "hermite_gaussian") return BasisKind::hermite_gaussian;
    if (name == "legendre_uniform") return BasisKind::legendre_uniform;
    throw std::invalid_argument("unknown basis family: " + name);
}

// Evaluate orthonormal basis polynomials 0..order at lambda; out[k] = psi_k(lambda).
// Three-term recurrences in orthonormal form keep the evaluation stable.
inline void eval_basis_all(const BasisFamily& family, int order, double lambda,
                           std::vector<double>& out) {
    if (order < 0) throw std::invalid_argument("eval_basis: negative order");
    if (order > family.max_order) throw std::invalid_argument("eval_basis: order exceeds family max_order");
    out.resize(static_cast<std::size_t>(order) + 1);
    out[0] = 1.0;
    if (order == 0) return;
    if (family.kind == BasisKind::hermite_gaussian) {
        out[1] = lambda;
        // psi_{k+1} = (lambda psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1)
        for (int k = 1; k < order; ++k)
            out[k + 1] = (lambda * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                         std::sqrt(static_cast<double>(k + 1));
    } else {
        // Build monic-normalized Legendre P_k first, then scale by sqrt(2k+1).
        double pkm1 = 1.0, pk = lambda;
        out[1] = std::sqrt(3.0) * lambda;
        for (int k = 1; k < order; ++k) {
            const double pkp1 = ((2.0 * k + 1.0) * lambda * pk - k * pkm1) / (k + 1.0);
            pkm1 = pk;
            pk = pkp1;
            out[k + 1] = std::sqrt(2.0 * (k + 1.0) + 1.0) * pkp1;
        }
    }
}

inline double eval_basis(const BasisFamily& family, int k, double lambda) {
    std::vector<double> buf;
    eval_basis_all(family, k, lambda, buf);
    return buf[static_cast<std::size_t>(k)];
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // include the density: sum(weights) == 1
};

// Gauss rule with n nodes for the family's density, built by Golub-Welsch
// from the orthonormal three-term recurrence.  Exact for polynomial
// integrands of degree <= 2n-1.
inline QuadratureRule gauss_rule(BasisKind kind, int n) {
    if (n < 1) throw std::invalid_argument("gauss_rule: need at least one node");
    std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
    std::vector<double> off(static_cast<std::size_t>(n) - 1);
    for (int k = 1; k < n; ++k) {
        if (kind == BasisKind::hermite_gaussian)
            off[static_cast<std::size_t>(k) - 1] = std::sqrt(static_cast<double>(k));
        else
            off[static_cast<std::size_t>(k) - 1] =
                static_cast<double>(k) / std::sqrt(4.0 * k * k - 1.0);
    }
    QuadratureRule rule;
    std::vector<double> first;
    symmetric_tridiagonal_eigen(diag, off, rule.nodes, first);
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        rule.weights[static_cast<std::size_t>(j)] =
            first[static_cast<std::size_t>(j)] * first[static_cast<std::size_t>(j)];
    return rule;
}

inline QuadratureRule gauss_rule(const BasisFamily& family, int n) { return gauss_rule(family.kind, n); }

// Number of Gauss nodes that integrates a degree-d polynomial exactly.
inline int nodes_for_degree(int degree) { return degree / 2 + 1; }

// E[lambda^p * psi_{k1} * ... * psi_{km}] for the family's density, by Gauss
// quadrature with the node count chosen from the exact integrand degree.
// These moments drive the Galerkin projection; they are exact up to round-off.
inline double expectation_moment(const BasisFamily& family, const std::vector<int>& orders,
                                 int lambda_power = 0) {
    if (lambda_power < 0) throw std::invalid_argument("expectation_moment: negative lambda power");
    int degree = lambda_power;
    for (int k : orders) {
        if (k < 0 || k > family.max_order)
            throw std::invalid_argument("expectation_moment: basis index out of range");
        degree += k;
    }
    const int n = nodes_for_degree(degree);
    const QuadratureRule rule = gauss_rule(family.kind, n);
    int max_k = 0;
    for (int k : orders) max_k = std::max(max_k, k);
    BasisFamily eval_family{family.kind, max_k};

    double sum = 0.0;
    std::vector<double> psi;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double lam = rule.nodes[q];
        double term = rule.weights[q] * std::pow(lam, static_cast<double>(lambda_power));
        if (!orders.empty()) {
            eval_basis_all(eval_family, max_k, lam, psi);
            for (int k : orders) term *= psi[static_cast<std::size_t>(k)];
        }
        sum += term;
    }
    return sum;
}

}  // namespace pcdyn
