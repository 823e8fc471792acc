#pragma once

// Built-in example systems.  Each model packages a polynomial vector field
// with one standardized uncertain input (a parameter or an initial
// condition), default parameter values, a default initial state, and, for
// conservative systems, the Hamiltonian as a polynomial so that structure
// can be checked independently of the equations of motion.
//
// Uncertain quantities enter the field through the standardized variable
// lambda: a Gaussian input is written p0 + sigma*lambda with lambda ~ N(0,1),
// a uniform input as p0 + halfwidth*lambda with lambda ~ U(-1,1).

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcdyn/basis.hpp"
#include "pcdyn/galerkin.hpp"
#include "pcdyn/rng.hpp"

namespace pcdyn {

enum class Distribution { gaussian, uniform };

inline std::string to_string(Distribution d) {
    return d == Distribution::gaussian ? "gaussian" : "uniform";
}

struct UncertaintyDescriptor {
    enum class Kind { parameter, initial_condition };
    Kind kind = Kind::parameter;
    Distribution distribution = Distribution::gaussian;
    double scale = 0.0;  // std deviation (gaussian) or halfwidth (uniform)
    int coord = -1;      // affected coordinate for initial-condition uncertainty
};

// One monomial of a Hamiltonian: coeff * lambda^p * prod_i x_i^{e_i}, with
// x indexed like the field's state vector.
struct HamTerm {
    double coeff = 0.0;
    int lambda_power = 0;
    std::vector<std::pair<int, int>> exponents;
};

struct HamiltonianSpec {
    std::vector<HamTerm> terms;
};

struct ModelSpec {
    std::string name;
    PolynomialVectorField field;
    std::optional<HamiltonianSpec> hamiltonian;
    std::map<std::string, double> params;  // resolved values, override-checked
    std::vector<double> default_ic;
    UncertaintyDescriptor uncertain;
    std::vector<std::pair<int, int>> canonical_pairs;  // (q, p) coordinate pairs
};

// Hamilton's equations from a polynomial Hamiltonian: for each canonical
// pair, dq/dt = dH/dp and dp/dt = -dH/dq.  Used to cross-check that a
// model's field really is the canonical flow of its Hamiltonian.
inline PolynomialVectorField hamilton_equations(const HamiltonianSpec& ham, int dim,
                                                const std::vector<std::pair<int, int>>& pairs) {
    PolynomialVectorField field;
    field.dim = dim;
    auto add_derivative_terms = [&](int var, int target, double sign) {
        for (const auto& ht : ham.terms) {
            for (std::size_t k = 0; k < ht.exponents.size(); ++k) {
                const auto [v, e] = ht.exponents[k];
                if (v != var) continue;
                Term t;
                t.target = target;
                t.coeff = sign * ht.coeff * e;
                t.lambda_power = ht.lambda_power;
                for (std::size_t m = 0; m < ht.exponents.size(); ++m) {
                    if (m == k) {
                        if (e > 1) t.state_exponents.emplace_back(v, e - 1);
                    } else {
                        t.state_exponents.push_back(ht.exponents[m]);
                    }
                }
                detail::normalize_exponents(t.state_exponents);
                field.terms.push_back(std::move(t));
            }
        }
    };
    for (const auto& [q, p] : pairs) {
        add_derivative_terms(p, q, +1.0);
        add_derivative_terms(q, p, -1.0);
    }
    return field;
}

inline std::vector<std::string> model_names() {
    return {"duffing_unforced",     "duffing_forced", "duffing_uncertain_ic",
            "harmonic_uncertain_freq", "twotime_full", "twotime_averaged"};
}

namespace detail {

inline std::map<std::string, double> resolve_params(const std::string& model,
                                                    std::map<std::string, double> defaults,
                                                    const std::map<std::string, double>& overrides) {
    for (const auto& [key, value] : overrides) {
        auto it = defaults.find(key);
        if (it == defaults.end())
            throw std::invalid_argument("model '" + model + "' has no parameter '" + key + "'");
        it->second = value;
    }
    return defaults;
}

}  // namespace detail

// Build a model by name; overrides replace default parameter values and are
// validated against the model's parameter list.
inline ModelSpec make_model(const std::string& name,
                            const std::map<std::string, double>& overrides = {}) {
    ModelSpec m;
    m.name = name;
    if (name == "duffing_unforced") {
        // q'' + lambda q + q^3 = 0 with lambda = lambda0 + sigma*eta, eta ~ N(0,1).
        m.params = detail::resolve_params(name, {{"lambda0", -1.0}, {"sigma", 0.1}}, overrides);
        const double l0 = m.params["lambda0"], sg = m.params["sigma"];
        m.field.dim = 2;
        m.field.terms = {
            {0, 1.0, 0, {{1, 1}}},
            {1, -l0, 0, {{0, 1}}},
            {1, -sg, 1, {{0, 1}}},
            {1, -1.0, 0, {{0, 3}}},
        };
        m.hamiltonian = HamiltonianSpec{{
            {0.5, 0, {{1, 2}}},
            {0.5 * l0, 0, {{0, 2}}},
            {0.5 * sg, 1, {{0, 2}}},
            {0.25, 0, {{0, 4}}},
        }};
        m.default_ic = {1.0, 0.0};
        m.uncertain = {UncertaintyDescriptor::Kind::parameter, Distribution::gaussian, sg, -1};
        m.canonical_pairs = {{0, 1}};
    } else if (name == "duffing_forced") {
        // q'' + delta q' + lambda q + q^3 = gamma cos(omega t), uncertain lambda.
        m.params = detail::resolve_params(
            name,
            {{"lambda0", -1.0}, {"sigma", 0.1}, {"delta", 0.2}, {"gamma", 0.3}, {"omega", 1.0}},
            overrides);
        const double l0 = m.params["lambda0"], sg = m.params["sigma"];
        const double delta = m.params["delta"], gamma = m.params["gamma"], omega = m.params["omega"];
        m.field.dim = 2;
        m.field.terms = {
            {0, 1.0, 0, {{1, 1}}},
            {1, -delta, 0, {{1, 1}}},
            {1, -l0, 0, {{0, 1}}},
            {1, -sg, 1, {{0, 1}}},
            {1, -1.0, 0, {{0, 3}}},
            {1, gamma, 0, {}, Forcing::cosine, omega},
        };
        m.default_ic = {1.0, 0.0};
        m.uncertain = {UncertaintyDescriptor::Kind::parameter, Distribution::gaussian, sg, -1};
    } else if (name == "duffing_uncertain_ic") {
        // Forced Duffing with a certain stiffness but Gaussian position IC.
        m.params = detail::resolve_params(
            name,
            {{"lambda", -1.0}, {"sigma", 0.1}, {"delta", 0.2}, {"gamma", 0.3}, {"omega", 1.0}},
            overrides);
        const double lam = m.params["lambda"], sg = m.params["sigma"];
        const double delta = m.params["delta"], gamma = m.params["gamma"], omega = m.params["omega"];
        m.field.dim = 2;
        m.field.terms = {
            {0, 1.0, 0, {{1, 1}}},
            {1, -delta, 0, {{1, 1}}},
            {1, -lam, 0, {{0, 1}}},
            {1, -1.0, 0, {{0, 3}}},
            {1, gamma, 0, {}, Forcing::cosine, omega},
        };
        m.default_ic = {1.0, 0.0};
        m.uncertain = {UncertaintyDescriptor::Kind::initial_condition, Distribution::gaussian, sg, 0};
    } else if (name == "harmonic_uncertain_freq") {
        // q'' + (omega0 + alpha*lambda)^2 q = 0 with lambda ~ U(-1,1).
        m.params = detail::resolve_params(name, {{"omega0", 1.0}, {"alpha", 0.25}}, overrides);
        const double w0 = m.params["omega0"], a = m.params["alpha"];
        m.field.dim = 2;
        m.field.terms = {
            {0, 1.0, 0, {{1, 1}}},
            {1, -w0 * w0, 0, {{0, 1}}},
            {1, -2.0 * w0 * a, 1, {{0, 1}}},
            {1, -a * a, 2, {{0, 1}}},
        };
        m.hamiltonian = HamiltonianSpec{{
            {0.5, 0, {{1, 2}}},
            {0.5 * w0 * w0, 0, {{0, 2}}},
            {w0 * a, 1, {{0, 2}}},
            {0.5 * a * a, 2, {{0, 2}}},
        }};
        m.default_ic = {1.0, 0.0};
        m.uncertain = {UncertaintyDescriptor::Kind::parameter, Distribution::uniform, a, -1};
        m.canonical_pairs = {{0, 1}};
    } else if (name == "twotime_full") {
        // x'' + x + eps*delta x' + eps*beta x^3 = eps*gamma cos(omega t),
        // gamma = gamma0 + sigma*eta.
        m.params = detail::resolve_params(name,
                                          {{"epsilon", 0.1},
                                           {"delta", 0.0},
                                           {"beta", 1.0},
                                           {"gamma0", 1.0},
                                           {"sigma", 0.1},
                                           {"omega", 1.0}},
                                          overrides);
        const double eps = m.params["epsilon"], delta = m.params["delta"], beta = m.params["beta"];
        const double g0 = m.params["gamma0"], sg = m.params["sigma"], omega = m.params["omega"];
        m.field.dim = 2;
        m.field.terms = {
            {0, 1.0, 0, {{1, 1}}},
            {1, -1.0, 0, {{0, 1}}},
            {1, -eps * delta, 0, {{1, 1}}},
            {1, -eps * beta, 0, {{0, 3}}},
            {1, eps * g0, 0, {}, Forcing::cosine, omega},
            {1, eps * sg, 1, {}, Forcing::cosine, omega},
        };
        m.default_ic = {2.0, 0.0};
        m.uncertain = {UncertaintyDescriptor::Kind::parameter, Distribution::gaussian, sg, -1};
    } else if (name == "twotime_averaged") {
        // Slow-time amplitude equations for the system above, on the slow
        // time chi = eps*t with x ~ A(chi) cos(omega t) + B(chi) sin(omega t):
        //   2 A' = -delta A + (3/4) beta B (A^2+B^2)
        //   2 B' = -delta B - (3/4) beta A (A^2+B^2) + gamma
        m.params = detail::resolve_params(
            name, {{"delta", 0.0}, {"beta", 1.0}, {"gamma0", 1.0}, {"sigma", 0.1}}, overrides);
        const double delta = m.params["delta"], beta = m.params["beta"];
        const double g0 = m.params["gamma0"], sg = m.params["sigma"];
        m.field.dim = 2;
        m.field.terms = {
            {0, -0.5 * delta, 0, {{0, 1}}},
            {0, 0.375 * beta, 0, {{0, 2}, {1, 1}}},
            {0, 0.375 * beta, 0, {{1, 3}}},
            {1, -0.5 * delta, 0, {{1, 1}}},
            {1, -0.375 * beta, 0, {{0, 3}}},
            {1, -0.375 * beta, 0, {{0, 1}, {1, 2}}},
            {1, 0.5 * g0, 0, {}},
            {1, 0.5 * sg, 1, {}},
        };
        m.default_ic = {2.0, 0.0};
        m.uncertain = {UncertaintyDescriptor::Kind::parameter, Distribution::gaussian, sg, -1};
    } else {
        throw std::invalid_argument("unknown model: " + name);
    }
    m.field.validate();
    return m;
}

// Basis family matching the model's input distribution.
inline BasisFamily natural_family(const ModelSpec& model, int order) {
    return BasisFamily{model.uncertain.distribution == Distribution::gaussian
                           ? BasisKind::hermite_gaussian
                           : BasisKind::legendre_uniform,
                       order};
}

// Project a model's field at truncation order r, carrying over canonical
// structure when the model is Hamiltonian.
inline GalerkinSystem expand_model(const ModelSpec& model, int r,
                                   ProjectionMode mode = ProjectionMode::full) {
    GalerkinSystem sys = project(model.field, natural_family(model, r), r, mode);
    if (model.hamiltonian) sys.canonical_pairs = model.canonical_pairs;
    return sys;
}

// Draw one standardized sample of the model's uncertain input.
inline double sample_standardized(const ModelSpec& model, RandomStream& stream) {
    return model.uncertain.distribution == Distribution::gaussian ? stream.normal()
                                                                  : stream.uniform_sym();
}

// Deterministic initial state for a given standardized sample value.
inline std::vector<double> sampled_initial(const ModelSpec& model, double lambda_value) {
    std::vector<double> ic = model.default_ic;
    if (model.uncertain.kind == UncertaintyDescriptor::Kind::initial_condition)
        ic[static_cast<std::size_t>(model.uncertain.coord)] += model.uncertain.scale * lambda_value;
    return ic;
}

// Chaos coefficients of the initial state.  Parameter uncertainty leaves the
// initial state certain (order-0 coefficients only); initial-condition
// uncertainty adds scale * E[lambda psi_k] on the affected coordinate.
inline std::vector<double> expanded_initial(const ModelSpec& model, const GalerkinSystem& sys) {
    std::vector<double> X(static_cast<std::size_t>(sys.expanded_dim), 0.0);
    for (int i = 0; i < sys.base_dim; ++i)
        X[static_cast<std::size_t>(sys.flat_index(i, 0))] = model.default_ic[static_cast<std::size_t>(i)];
    if (model.uncertain.kind == UncertaintyDescriptor::Kind::initial_condition) {
        for (int s = 1; s <= sys.order; ++s) {
            const double proj = expectation_moment(sys.family, {s}, 1);
            if (proj != 0.0)
                X[static_cast<std::size_t>(sys.flat_index(model.uncertain.coord, s))] +=
                    model.uncertain.scale * proj;
        }
    }
    return X;
}

// Evaluate the Hamiltonian at a state with the parameter fixed.
inline double eval_hamiltonian(const HamiltonianSpec& ham, double lambda_value,
                               std::span<const double> x) {
    double h = 0.0;
    for (const auto& t : ham.terms) {
        double v = t.coeff;
        for (int i = 0; i < t.lambda_power; ++i) v *= lambda_value;
        v *= detail::eval_monomial(x, t.exponents);
        h += v;
    }
    return h;
}

}  // namespace pcdyn
