#pragma once

// Polynomial vector fields with one scalar uncertain parameter, and their
// Galerkin projection onto an orthonormal chaos basis.
//
// A field is a list of terms
//
//   dx_target/dt += coeff * lambda^p * prod_j x_j^{e_j} * forcing(t)
//
// where lambda is the standardized random parameter and forcing is 1,
// cos(omega t) or sin(omega t).  Projection expands every state variable as
// x_j = sum_k X_{jk} psi_k(lambda), multiplies out the monomials, and takes
// expectations term by term with exact Gauss quadrature, yielding a
// deterministic polynomial system in the coefficients X_{jk}.
//
// Flat coefficient layout: index(i, s) = s * base_dim + i, i.e. all base
// coordinates at chaos order 0 first, then order 1, and so on.  For a
// (q, p) system at order 1 this reads (Q0, P0, Q1, P1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcdyn/basis.hpp"
#include "pcdyn/linalg.hpp"

namespace pcdyn {

enum class Forcing { none, cosine, sine };

inline std::string to_string(Forcing f) {
    switch (f) {
        case Forcing::cosine: return "cos";
        case Forcing::sine: return "sin";
        default: return "none";
    }
}

inline Forcing forcing_from_string(const std::string& name) {
    if (name == "none") return Forcing::none;
    if (name == "cos") return Forcing::cosine;
    if (name == "sin") return Forcing::sine;
    throw std::invalid_argument("unknown forcing kind: " + name);
}

inline double forcing_value(Forcing f, double omega, double t) {
    switch (f) {
        case Forcing::cosine: return std::cos(omega * t);
        case Forcing::sine: return std::sin(omega * t);
        default: return 1.0;
    }
}

// One monomial term of a vector field.  state_exponents holds (variable
// index, exponent) pairs, sorted by variable, exponents >= 1.
struct Term {
    int target = 0;
    double coeff = 0.0;
    int lambda_power = 0;
    std::vector<std::pair<int, int>> state_exponents;
    Forcing forcing = Forcing::none;
    double forcing_omega = 0.0;
};

namespace detail {

inline void normalize_exponents(std::vector<std::pair<int, int>>& exps) {
    std::sort(exps.begin(), exps.end());
    std::vector<std::pair<int, int>> merged;
    for (const auto& [var, e] : exps) {
        if (!merged.empty() && merged.back().first == var)
            merged.back().second += e;
        else
            merged.emplace_back(var, e);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const auto& ve) { return ve.second == 0; }),
                 merged.end());
    exps = std::move(merged);
}

inline double eval_monomial(std::span<const double> x,
                            const std::vector<std::pair<int, int>>& exps) {
    double v = 1.0;
    for (const auto& [var, e] : exps) {
        const double xv = x[static_cast<std::size_t>(var)];
        for (int i = 0; i < e; ++i) v *= xv;
    }
    return v;
}

}  // namespace detail

struct PolynomialVectorField {
    int dim = 0;
    std::vector<Term> terms;
    std::string param_name = "lambda";

    void validate() const {
        for (const auto& t : terms) {
            if (t.target < 0 || t.target >= dim)
                throw std::invalid_argument("field term target out of range");
            if (t.lambda_power < 0) throw std::invalid_argument("field term has negative lambda power");
            if (!std::isfinite(t.coeff)) throw std::invalid_argument("field term has non-finite coefficient");
            for (const auto& [var, e] : t.state_exponents) {
                if (var < 0 || var >= dim) throw std::invalid_argument("field term variable out of range");
                if (e < 1) throw std::invalid_argument("field term exponent must be positive");
            }
        }
    }

    // Evaluate with the parameter fixed to a concrete value.
    void eval(double lambda_value, double t, std::span<const double> x,
              std::span<double> dxdt) const {
        for (int i = 0; i < dim; ++i) dxdt[static_cast<std::size_t>(i)] = 0.0;
        for (const auto& term : terms) {
            double v = term.coeff;
            for (int i = 0; i < term.lambda_power; ++i) v *= lambda_value;
            v *= detail::eval_monomial(x, term.state_exponents);
            if (term.forcing != Forcing::none) v *= forcing_value(term.forcing, term.forcing_omega, t);
            dxdt[static_cast<std::size_t>(term.target)] += v;
        }
    }

    int max_state_degree() const {
        int d = 0;
        for (const auto& t : terms) {
            int s = 0;
            for (const auto& [var, e] : t.state_exponents) s += e;
            d = std::max(d, s);
        }
        return d;
    }

    int max_lambda_power() const {
        int d = 0;
        for (const auto& t : terms) d = std::max(d, t.lambda_power);
        return d;
    }
};

// Fix the uncertain parameter to a concrete standardized value, folding
// lambda^p into the coefficients.  Used by Monte Carlo sampling.
inline PolynomialVectorField substitute_parameter(const PolynomialVectorField& field,
                                                  double lambda_value) {
    PolynomialVectorField out;
    out.dim = field.dim;
    out.param_name = field.param_name;
    out.terms.reserve(field.terms.size());
    for (Term t : field.terms) {
        for (int i = 0; i < t.lambda_power; ++i) t.coeff *= lambda_value;
        t.lambda_power = 0;
        out.terms.push_back(std::move(t));
    }
    return out;
}

enum class ProjectionMode { full, linearized_fluctuations };

inline std::string to_string(ProjectionMode m) {
    return m == ProjectionMode::full ? "full" : "linearized_fluctuations";
}

inline ProjectionMode projection_mode_from_string(const std::string& name) {
    if (name == "full") return ProjectionMode::full;
    if (name == "linearized_fluctuations") return ProjectionMode::linearized_fluctuations;
    throw std::invalid_argument("unknown projection mode: " + name);
}

// One monomial term of the projected coefficient system, over the flat
// expanded variables.
struct ExpandedTerm {
    int target = 0;
    double coeff = 0.0;
    std::vector<std::pair<int, int>> exponents;
    Forcing forcing = Forcing::none;
    double forcing_omega = 0.0;
};

struct Moments {
    std::vector<double> mean;
    std::vector<double> variance;
};

class GalerkinSystem {
public:
    int base_dim = 0;
    int order = 0;
    int expanded_dim = 0;
    BasisFamily family;
    ProjectionMode mode = ProjectionMode::full;
    PolynomialVectorField base_field;
    std::vector<ExpandedTerm> terms;
    // (q index, p index) base pairs when the source model is canonical.
    std::vector<std::pair<int, int>> canonical_pairs;

    int flat_index(int coord, int chaos_order) const { return chaos_order * base_dim + coord; }

    // d/dt of the coefficient vector.  Full projections evaluate
    // pseudo-spectrally (reconstruct at quadrature nodes, evaluate the base
    // field, project back), which matches the symbolic term list to
    // round-off because the quadrature is exact for the integrand degree.
    // Linearized projections must use their filtered term list directly.
    void rhs(double t, std::span<const double> X, std::span<double> dXdt) const {
        if (mode == ProjectionMode::full)
            rhs_pseudospectral(t, X, dXdt);
        else
            rhs_symbolic(t, X, dXdt);
    }

    void rhs_symbolic(double t, std::span<const double> X, std::span<double> dXdt) const {
        for (int i = 0; i < expanded_dim; ++i) dXdt[static_cast<std::size_t>(i)] = 0.0;
        for (const auto& term : terms) {
            double v = term.coeff * detail::eval_monomial(X, term.exponents);
            if (term.forcing != Forcing::none) v *= forcing_value(term.forcing, term.forcing_omega, t);
            dXdt[static_cast<std::size_t>(term.target)] += v;
        }
    }

    void rhs_pseudospectral(double t, std::span<const double> X, std::span<double> dXdt) const {
        thread_local std::vector<double> x_node, f_node, projected;
        x_node.resize(static_cast<std::size_t>(base_dim));
        f_node.resize(static_cast<std::size_t>(base_dim));
        projected.assign(static_cast<std::size_t>(expanded_dim), 0.0);
        const std::size_t n_nodes = rule_.nodes.size();
        for (std::size_t q = 0; q < n_nodes; ++q) {
            const double* psi = &psi_at_nodes_[q * static_cast<std::size_t>(order + 1)];
            for (int i = 0; i < base_dim; ++i) {
                double xi = 0.0;
                for (int s = 0; s <= order; ++s)
                    xi += X[static_cast<std::size_t>(flat_index(i, s))] * psi[s];
                x_node[static_cast<std::size_t>(i)] = xi;
            }
            base_field.eval(rule_.nodes[q], t, x_node, f_node);
            const double w = rule_.weights[q];
            for (int i = 0; i < base_dim; ++i) {
                const double wf = w * f_node[static_cast<std::size_t>(i)];
                for (int s = 0; s <= order; ++s)
                    projected[static_cast<std::size_t>(flat_index(i, s))] += wf * psi[s];
            }
        }
        std::copy(projected.begin(), projected.end(), dXdt.begin());
    }

    // Analytic Jacobian of the expanded term list with respect to X.
    void jacobian(double t, std::span<const double> X, Matrix& J) const {
        const std::size_t d = static_cast<std::size_t>(expanded_dim);
        if (J.rows() != d || J.cols() != d) J = Matrix(d, d);
        std::fill(J.data(), J.data() + d * d, 0.0);
        for (const auto& term : terms) {
            double base = term.coeff;
            if (term.forcing != Forcing::none) base *= forcing_value(term.forcing, term.forcing_omega, t);
            for (std::size_t k = 0; k < term.exponents.size(); ++k) {
                const auto [var, e] = term.exponents[k];
                double v = base * e;
                const double xv = X[static_cast<std::size_t>(var)];
                for (int i = 0; i < e - 1; ++i) v *= xv;
                for (std::size_t m = 0; m < term.exponents.size(); ++m) {
                    if (m == k) continue;
                    const auto [ovar, oe] = term.exponents[m];
                    const double ov = X[static_cast<std::size_t>(ovar)];
                    for (int i = 0; i < oe; ++i) v *= ov;
                }
                J(static_cast<std::size_t>(term.target), static_cast<std::size_t>(var)) += v;
            }
        }
    }

    void set_quadrature(const QuadratureRule& rule, std::vector<double> psi_table) {
        rule_ = rule;
        psi_at_nodes_ = std::move(psi_table);
    }

    const QuadratureRule& quadrature() const { return rule_; }

private:
    QuadratureRule rule_;
    std::vector<double> psi_at_nodes_;  // [node * (order+1) + k]
};

// Galerkin-project a polynomial field onto chaos orders 0..r.
inline GalerkinSystem project(const PolynomialVectorField& field, const BasisFamily& family,
                              int r, ProjectionMode mode = ProjectionMode::full) {
    if (r < 0) throw std::invalid_argument("project: negative truncation order");
    field.validate();
    GalerkinSystem sys;
    sys.base_dim = field.dim;
    sys.order = r;
    sys.expanded_dim = field.dim * (r + 1);
    sys.family = BasisFamily{family.kind, std::max(family.max_order, r)};
    sys.mode = mode;
    sys.base_field = field;

    const BasisFamily moment_family{family.kind, r};

    // target/exponents/forcing -> accumulated coefficient
    struct Key {
        int target;
        std::vector<std::pair<int, int>> exps;
        int forcing;
        double omega;
        bool operator<(const Key& o) const {
            if (target != o.target) return target < o.target;
            if (forcing != o.forcing) return forcing < o.forcing;
            if (omega != o.omega) return omega < o.omega;
            return exps < o.exps;
        }
    };
    std::map<Key, double> accum;

    for (const auto& term : field.terms) {
        // Slots: one entry per factor of the state monomial.
        std::vector<int> slot_var;
        for (const auto& [var, e] : term.state_exponents)
            for (int i = 0; i < e; ++i) slot_var.push_back(var);
        const int m = static_cast<int>(slot_var.size());

        // Enumerate all assignments of chaos orders to slots.
        std::vector<int> assign(static_cast<std::size_t>(m), 0);
        while (true) {
            int fluctuation_degree = 0;
            for (int k : assign)
                if (k >= 1) ++fluctuation_degree;
            const bool keep = mode == ProjectionMode::full || fluctuation_degree <= 1;
            if (keep) {
                std::vector<int> orders(assign.begin(), assign.end());
                orders.push_back(0);  // placeholder for the projection index s
                std::vector<std::pair<int, int>> exps;
                exps.reserve(static_cast<std::size_t>(m));
                for (int slot = 0; slot < m; ++slot)
                    exps.emplace_back(static_cast<int>(assign[static_cast<std::size_t>(slot)]) *
                                              field.dim +
                                          slot_var[static_cast<std::size_t>(slot)],
                                      1);
                detail::normalize_exponents(exps);
                for (int s = 0; s <= r; ++s) {
                    orders.back() = s;
                    const double moment = expectation_moment(moment_family, orders, term.lambda_power);
                    if (moment == 0.0) continue;
                    Key key{s * field.dim + term.target, exps, static_cast<int>(term.forcing),
                            term.forcing == Forcing::none ? 0.0 : term.forcing_omega};
                    accum[key] += term.coeff * moment;
                }
            }
            // next assignment
            int pos = m - 1;
            while (pos >= 0 && assign[static_cast<std::size_t>(pos)] == r) {
                assign[static_cast<std::size_t>(pos)] = 0;
                --pos;
            }
            if (pos < 0) break;
            ++assign[static_cast<std::size_t>(pos)];
        }
    }

    // Odd-moment terms vanish analytically but quadrature leaves round-off
    // residue; drop anything at that scale.
    constexpr double kDropTol = 1e-13;
    for (const auto& [key, coeff] : accum) {
        if (std::fabs(coeff) <= kDropTol) continue;
        ExpandedTerm et;
        et.target = key.target;
        et.coeff = coeff;
        et.exponents = key.exps;
        et.forcing = static_cast<Forcing>(key.forcing);
        et.forcing_omega = key.omega;
        sys.terms.push_back(std::move(et));
    }

    // Pseudo-spectral machinery: one rule exact for every projected integrand.
    const int degree = field.max_lambda_power() + field.max_state_degree() * r + r;
    const int n_nodes = nodes_for_degree(degree);
    QuadratureRule rule = gauss_rule(family.kind, n_nodes);
    std::vector<double> psi_table(static_cast<std::size_t>(n_nodes) *
                                  static_cast<std::size_t>(r + 1));
    std::vector<double> psi;
    const BasisFamily eval_family{family.kind, r};
    for (int q = 0; q < n_nodes; ++q) {
        eval_basis_all(eval_family, r, rule.nodes[static_cast<std::size_t>(q)], psi);
        for (int k = 0; k <= r; ++k)
            psi_table[static_cast<std::size_t>(q) * static_cast<std::size_t>(r + 1) +
                      static_cast<std::size_t>(k)] = psi[static_cast<std::size_t>(k)];
    }
    sys.set_quadrature(rule, std::move(psi_table));
    return sys;
}

// Mean and variance per base coordinate implied by orthonormality:
// mean_i = X_{i0}, var_i = sum_{k>=1} X_{ik}^2.
inline Moments moments(const GalerkinSystem& sys, std::span<const double> X) {
    Moments m;
    m.mean.resize(static_cast<std::size_t>(sys.base_dim));
    m.variance.assign(static_cast<std::size_t>(sys.base_dim), 0.0);
    for (int i = 0; i < sys.base_dim; ++i) {
        m.mean[static_cast<std::size_t>(i)] = X[static_cast<std::size_t>(sys.flat_index(i, 0))];
        for (int s = 1; s <= sys.order; ++s) {
            const double c = X[static_cast<std::size_t>(sys.flat_index(i, s))];
            m.variance[static_cast<std::size_t>(i)] += c * c;
        }
    }
    return m;
}

// --- JSON serialization of term lists (used for golden-file comparison) ---

inline nlohmann::json terms_to_json(const std::vector<ExpandedTerm>& terms) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : terms) {
        nlohmann::json jt;
        jt["target"] = t.target;
        jt["coeff"] = t.coeff;
        nlohmann::json exps = nlohmann::json::array();
        for (const auto& [var, e] : t.exponents) exps.push_back({var, e});
        jt["exponents"] = exps;
        if (t.forcing != Forcing::none) {
            jt["forcing"] = to_string(t.forcing);
            jt["omega"] = t.forcing_omega;
        }
        arr.push_back(std::move(jt));
    }
    return arr;
}

inline nlohmann::json system_to_json(const GalerkinSystem& sys) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["family"] = to_string(sys.family.kind);
    j["order"] = sys.order;
    j["mode"] = to_string(sys.mode);
    j["base_dim"] = sys.base_dim;
    j["expanded_dim"] = sys.expanded_dim;
    j["terms"] = terms_to_json(sys.terms);
    return j;
}

inline std::vector<ExpandedTerm> terms_from_json(const nlohmann::json& arr) {
    std::vector<ExpandedTerm> terms;
    for (const auto& jt : arr) {
        ExpandedTerm t;
        t.target = jt.at("target").get<int>();
        t.coeff = jt.at("coeff").get<double>();
        for (const auto& ve : jt.at("exponents"))
            t.exponents.emplace_back(ve.at(0).get<int>(), ve.at(1).get<int>());
        detail::normalize_exponents(t.exponents);
        if (jt.contains("forcing")) {
            t.forcing = forcing_from_string(jt.at("forcing").get<std::string>());
            t.forcing_omega = jt.at("omega").get<double>();
        }
        terms.push_back(std::move(t));
    }
    return terms;
}

// Coefficient-wise comparison of two term lists.  Returns human-readable
// difference lines; empty means equal within tol.
inline std::vector<std::string> diff_term_lists(const std::vector<ExpandedTerm>& actual,
                                                const std::vector<ExpandedTerm>& expected,
                                                double tol) {
    auto describe = [](const ExpandedTerm& t) {
        std::string s = "d/dt[" + std::to_string(t.target) + "]: ";
        if (t.exponents.empty()) s += "1";
        for (std::size_t i = 0; i < t.exponents.size(); ++i) {
            if (i) s += "*";
            s += "X" + std::to_string(t.exponents[i].first);
            if (t.exponents[i].second > 1) s += "^" + std::to_string(t.exponents[i].second);
        }
        if (t.forcing != Forcing::none)
            s += " * " + to_string(t.forcing) + "(" + std::to_string(t.forcing_omega) + " t)";
        return s;
    };
    using MapKey = std::tuple<int, std::vector<std::pair<int, int>>, int, double>;
    auto key_of = [](const ExpandedTerm& t) {
        return MapKey{t.target, t.exponents, static_cast<int>(t.forcing),
                      t.forcing == Forcing::none ? 0.0 : t.forcing_omega};
    };
    std::map<MapKey, double> exp_map;
    std::map<MapKey, ExpandedTerm> exp_terms;
    for (const auto& t : expected) {
        exp_map[key_of(t)] += t.coeff;
        exp_terms[key_of(t)] = t;
    }
    std::vector<std::string> diffs;
    std::map<MapKey, bool> seen;
    for (const auto& t : actual) {
        const auto k = key_of(t);
        auto it = exp_map.find(k);
        if (it == exp_map.end()) {
            diffs.push_back("extra term    " + describe(t) + "  coeff " + std::to_string(t.coeff));
            continue;
        }
        seen[k] = true;
        if (std::fabs(t.coeff - it->second) > tol)
            diffs.push_back("coeff mismatch " + describe(t) + "  expected " +
                            std::to_string(it->second) + " got " + std::to_string(t.coeff));
    }
    for (const auto& [k, coeff] : exp_map)
        if (!seen.count(k))
            diffs.push_back("missing term  " + describe(exp_terms[k]) + "  expected coeff " +
                            std::to_string(coeff));
    return diffs;
}

}  // namespace pcdyn
