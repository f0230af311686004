#pragma once

#include <string>
#include <variant>
#include <vector>

#include "bifurcata/bvp.hpp"
#include "bifurcata/polynomial.hpp"

namespace bifurcata {

using ProblemSpec = std::variant<PolynomialSpec, BvpSpec>;

inline PotentialFamily make_family(const ProblemSpec& spec, const std::string& name = "problem") {
    return std::visit(
        [&](const auto& s) -> PotentialFamily {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PolynomialSpec>) {
                return make_polynomial_family(s, name);
            } else {
                return make_bvp_family(s, name);
            }
        },
        spec);
}

namespace builtin {

namespace detail {
inline PolynomialTerm term(std::vector<int> lp, std::vector<int> up, double c) { return {std::move(lp), std::move(up), c}; }
} // namespace detail

using detail::term;

/// ½(1−λ)u₁² + ½u₂² + ¼u₁⁴
inline PolynomialSpec pitchfork() {
    return {1, 2, {term({0}, {2, 0}, 0.5), term({1}, {2, 0}, -0.5), term({0}, {0, 2}, 0.5), term({0}, {4, 0}, 0.25)}};
}

/// ½(λ−1)u₁² + ½u₂² − ¼u₁⁴, the pitchfork with the parameter direction reversed.
inline PolynomialSpec mirror_pitchfork() {
    return {1, 2, {term({0}, {2, 0}, -0.5), term({1}, {2, 0}, 0.5), term({0}, {0, 2}, 0.5), term({0}, {4, 0}, -0.25)}};
}

/// ½(1−λ)u₁² + ½u₂² + ⅓u₁³
inline PolynomialSpec transcritical() {
    return {1, 2, {term({0}, {2, 0}, 0.5), term({1}, {2, 0}, -0.5), term({0}, {0, 2}, 0.5), term({0}, {3, 0}, 1.0 / 3.0)}};
}

/// ½(1−λ)u₁² + ½u₂²
inline PolynomialSpec pure_quadratic() {
    return {1, 2, {term({0}, {2, 0}, 0.5), term({1}, {2, 0}, -0.5), term({0}, {0, 2}, 0.5)}};
}

/// ½(1−λ)u₁² + ½u₂² + u₁²u₂; the complement equation gives ψ = −z²·e₂.
inline PolynomialSpec coupling() {
    return {1, 2, {term({0}, {2, 0}, 0.5), term({1}, {2, 0}, -0.5), term({0}, {0, 2}, 0.5), term({0}, {2, 1}, 1.0)}};
}

/// ½uᵀdiag(1,2)u − λ·½‖u‖² + ¼(u₁⁴ + u₂⁴)
inline PolynomialSpec diag12_quartic() {
    return {1,
            2,
            {term({0}, {2, 0}, 0.5), term({0}, {0, 2}, 1.0), term({1}, {2, 0}, -0.5), term({1}, {0, 2}, -0.5),
             term({0}, {4, 0}, 0.25), term({0}, {0, 4}, 0.25)}};
}

/// Two decoupled pitchforks sharing λ* = 1 plus a stiff third coordinate.
inline PolynomialSpec double_pitchfork() {
    return {1,
            3,
            {term({0}, {2, 0, 0}, 0.5), term({1}, {2, 0, 0}, -0.5), term({0}, {0, 2, 0}, 0.5),
             term({1}, {0, 2, 0}, -0.5), term({0}, {4, 0, 0}, 0.25), term({0}, {0, 4, 0}, 0.25),
             term({0}, {0, 0, 2}, 0.5)}};
}

/// ½(1−λ₁)u₁² + ½(1−λ₂)u₂² + ¼(u₁⁴ + u₂⁴); pencil B = I, B̂₁ = diag(1,0), B̂₂ = diag(0,1).
inline PolynomialSpec two_param_diag() {
    return {2,
            2,
            {term({0, 0}, {2, 0}, 0.5), term({1, 0}, {2, 0}, -0.5), term({0, 0}, {0, 2}, 0.5),
             term({0, 1}, {0, 2}, -0.5), term({0, 0}, {4, 0}, 0.25), term({0, 0}, {0, 4}, 0.25)}};
}

/// Discrete Laplacian pencil on 8 nodes with G(v) = ½v² − ¼v⁴.
inline BvpSpec bvp_laplace() { return {8, {0.0, 0.0, 0.5}, {0.0, 0.0, 0.5, 0.0, -0.25}, 1.0}; }

inline const std::vector<std::string>& names() {
    static const std::vector<std::string> list = {"pitchfork",      "mirror_pitchfork", "transcritical",
                                                  "pure_quadratic", "coupling",         "diag12_quartic",
                                                  "double_pitchfork", "two_param_diag", "bvp_laplace"};
    return list;
}

inline ProblemSpec by_name(const std::string& name) {
    if (name == "pitchfork") return pitchfork();
    if (name == "mirror_pitchfork") return mirror_pitchfork();
    if (name == "transcritical") return transcritical();
    if (name == "pure_quadratic") return pure_quadratic();
    if (name == "coupling") return coupling();
    if (name == "diag12_quartic") return diag12_quartic();
    if (name == "double_pitchfork") return double_pitchfork();
    if (name == "two_param_diag") return two_param_diag();
    if (name == "bvp_laplace") return bvp_laplace();
    throw ArgumentError("unknown builtin problem '" + name + "'");
}

inline PotentialFamily family(const std::string& name) { return make_family(by_name(name), name); }

} // namespace builtin
} // namespace bifurcata
