#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bifurcata/model.hpp"

namespace bifurcata {

/// c · Π λ_j^{lambda_powers[j]} · Π u_i^{u_powers[i]}
struct PolynomialTerm {
    std::vector<int> lambda_powers;
    std::vector<int> u_powers;
    double coefficient = 0.0;

    bool operator==(const PolynomialTerm&) const = default;
};

struct PolynomialSpec {
    int dim_param = 1;
    int dim_state = 1;
    std::vector<PolynomialTerm> terms;

    bool operator==(const PolynomialSpec&) const = default;
};

namespace detail {

inline double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

struct Monomial {
    double coefficient;
    std::vector<int> lambda_powers;
    std::vector<int> u_powers;

    double eval(const Vector& lambda, const Vector& u) const {
        double v = coefficient;
        for (std::size_t j = 0; j < lambda_powers.size(); ++j) v *= ipow(lambda(static_cast<Eigen::Index>(j)), lambda_powers[j]);
        for (std::size_t i = 0; i < u_powers.size(); ++i) v *= ipow(u(static_cast<Eigen::Index>(i)), u_powers[i]);
        return v;
    }

    /// ∂/∂u_i, or nullopt when the monomial does not depend on u_i.
    std::optional<Monomial> derivative(std::size_t i) const {
        if (u_powers[i] == 0) return std::nullopt;
        Monomial d = *this;
        d.coefficient *= u_powers[i];
        d.u_powers[i] -= 1;
        return d;
    }
};

/// Monomial lists for F, ∂_i F and ∂_i ∂_j F, built once.
struct PolynomialTables {
    int n = 0;
    std::vector<Monomial> value;
    std::vector<std::vector<Monomial>> gradient;
    std::vector<std::vector<Monomial>> hessian; // row-major, upper triangle filled

    double eval_value(const Vector& lambda, const Vector& u) const {
        double v = 0.0;
        for (const auto& m : value) v += m.eval(lambda, u);
        return v;
    }
    Vector eval_gradient(const Vector& lambda, const Vector& u) const {
        Vector g = Vector::Zero(n);
        for (int i = 0; i < n; ++i) {
            for (const auto& m : gradient[static_cast<std::size_t>(i)]) g(i) += m.eval(lambda, u);
        }
        return g;
    }
    Matrix eval_hessian(const Vector& lambda, const Vector& u) const {
        Matrix h = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                double v = 0.0;
                for (const auto& m : hessian[static_cast<std::size_t>(i * n + j)]) v += m.eval(lambda, u);
                h(i, j) = v;
                h(j, i) = v;
            }
        }
        return h;
    }
};

} // namespace detail

/// Builds a family whose value, gradient and Hessian come from exact
/// differentiation of the polynomial. Terms of degree < 2 in u are rejected:
/// they would make ∇F(λ⃗, 0) ≠ 0.
inline PotentialFamily make_polynomial_family(const PolynomialSpec& spec, std::string name = "polynomial") {
    if (spec.dim_param < 1) throw InvalidSpecError("polynomial spec: dim_param must be positive");
    if (spec.dim_state < 1) throw InvalidSpecError("polynomial spec: dim_state must be positive");
    if (spec.terms.empty()) throw InvalidSpecError("polynomial spec: no terms");

    auto tables = std::make_shared<detail::PolynomialTables>();
    const auto n = static_cast<std::size_t>(spec.dim_state);
    tables->n = spec.dim_state;
    tables->gradient.resize(n);
    tables->hessian.resize(n * n);
    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
        const auto& term = spec.terms[t];
        const std::string where = "polynomial spec term " + std::to_string(t);
        if (term.lambda_powers.size() != static_cast<std::size_t>(spec.dim_param)) {
            throw InvalidSpecError(where + ": lambda powers have wrong length");
        }
        if (term.u_powers.size() != n) throw InvalidSpecError(where + ": u powers have wrong length");
        int degree = 0;
        for (int k : term.lambda_powers) {
            if (k < 0) throw InvalidSpecError(where + ": negative power");
        }
        for (int k : term.u_powers) {
            if (k < 0) throw InvalidSpecError(where + ": negative power");
            degree += k;
        }
        if (degree < 2) {
            throw InvalidSpecError(where + ": total degree in u is " + std::to_string(degree) +
                                   " (constant and linear terms in u break the trivial solution)");
        }
        detail::Monomial m{term.coefficient, term.lambda_powers, term.u_powers};
        tables->value.push_back(m);
        for (std::size_t i = 0; i < n; ++i) {
            auto di = m.derivative(i);
            if (!di) continue;
            tables->gradient[i].push_back(*di);
            for (std::size_t j = i; j < n; ++j) {
                if (auto dij = di->derivative(j)) tables->hessian[i * n + j].push_back(*dij);
            }
        }
    }

    PotentialFamily f;
    f.dim_state = spec.dim_state;
    f.dim_param = spec.dim_param;
    f.name = std::move(name);
    f.description = "polynomial family with " + std::to_string(spec.terms.size()) + " terms";
    f.value_fn = [tables](const Vector& l, const Vector& u) { return tables->eval_value(l, u); };
    f.gradient_fn = [tables](const Vector& l, const Vector& u) { return tables->eval_gradient(l, u); };
    f.hessian_fn = [tables](const Vector& l, const Vector& u) { return tables->eval_hessian(l, u); };
    return f;
}

} // namespace bifurcata
