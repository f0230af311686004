#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bifurcata/spectral.hpp"

namespace bifurcata {

/// λ ↦ B_λ(0).
using HessianPath = std::function<Matrix(double)>;

inline HessianPath hessian_path(const PotentialFamily& family) {
    if (family.dim_param != 1) throw ArgumentError("hessian path needs a one-parameter family");
    return [family](double lambda) { return family.hessian_at_zero(scalar_param(lambda)); };
}

/// Eigenvalues of S with |value| < ε_track, ascending.
inline std::vector<double> eig0_set(const SymmetricOperator& s, double eps_track) {
    if (!(eps_track > 0.0)) throw ArgumentError("ε_track must be positive");
    std::vector<double> out;
    if (s.dim() == 0) return out;
    Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix(), Eigen::EigenvaluesOnly);
    for (double e : es.eigenvalues()) {
        if (std::abs(e) < eps_track) out.push_back(e);
    }
    return out;
}

inline int parity_from_counts(int r_plus, int r_minus) {
    if (r_plus < 0 || r_minus < 0) throw ArgumentError("crossing counts must be nonnegative");
    return ((r_plus + r_minus) % 2 == 0) ? 1 : -1;
}

/// (−1)^m with m the multiplicity of λ₀ ∈ σ(K) \ {0}.
inline int parity_compact_pencil(const SymmetricOperator& k, double lambda0, double null_tol) {
    if (!(null_tol > 0.0)) throw ArgumentError("null tolerance must be positive");
    if (std::abs(lambda0) <= null_tol) throw ArgumentError("λ₀ must be a nonzero eigenvalue");
    Eigen::SelfAdjointEigenSolver<Matrix> es(k.matrix(), Eigen::EigenvaluesOnly);
    int multiplicity = 0;
    for (double e : es.eigenvalues()) {
        if (std::abs(e - lambda0) <= null_tol) ++multiplicity;
    }
    if (multiplicity == 0) throw ArgumentError("λ₀ = " + std::to_string(lambda0) + " is not in the spectrum");
    return multiplicity % 2 == 0 ? 1 : -1;
}

struct CrossingSample {
    double lambda = 0.0;
    std::vector<double> eig0;
    int r = 0;                  ///< |eig₀ ∩ ℝ⁻|
    int mu = 0;                 ///< full Morse index of B_λ(0)
    int nu = 0;
    double distance_to_star = 0.0; ///< ‖B_λ(0) − B_{λ*}(0)‖
};

struct CrossingConditions {
    bool kernel_trivial_nearby = false; ///< Ker B_λ(0) = {0} on every sample
    bool continuous_at_star = false;    ///< ‖B_λ − B_{λ*}‖ shrinks monotonically towards λ*
    bool degenerate_at_star = false;    ///< 0 ∈ σ(B_{λ*}(0))
    bool counts_differ = false;         ///< r⁺ ≠ r⁻
};

struct CrossingReport {
    double lambda_star = 0.0;
    std::vector<CrossingSample> left;  ///< ordered by increasing distance from λ*
    std::vector<CrossingSample> right;
    int r_plus = 0;
    int r_minus = 0;
    int parity = 1;
    double delta_plus = 0.0;  ///< stabilized δ′ on the right
    double delta_minus = 0.0; ///< stabilized δ′ on the left
    int mu_star = 0;
    int nu_star = 0;
    double eps_track = 0.0;
    double eps_null = 0.0;
    CrossingConditions conditions;
};

struct CrossingSettings {
    int steps = 16;
    double eps_track = 0.0; ///< 0 selects half the smallest nonzero |eigenvalue| of B_{λ*}(0)
    double eps_null = 0.0;  ///< 0 selects 1e-8·(1 + ‖B_{λ*}(0)‖)
};

namespace detail {

/// Smallest 0-based index k with r_k = r_{k+1} = r_{k+2}, or −1.
inline int stabilized_index(const std::vector<CrossingSample>& side) {
    for (std::size_t k = 0; k + 2 < side.size(); ++k) {
        if (side[k].r == side[k + 1].r && side[k].r == side[k + 2].r) return static_cast<int>(k);
    }
    return -1;
}

inline bool monotone_distances(const std::vector<CrossingSample>& side, double slack) {
    for (std::size_t k = 1; k < side.size(); ++k) {
        if (side[k].distance_to_star + slack < side[k - 1].distance_to_star) return false;
    }
    return true;
}

} // namespace detail

/// Crossing numbers r± of the 0-group of B_λ(0) near λ*, from samples
/// λ* ± δ·k/steps, k = 1..steps. Each side reports its count at the smallest
/// sampled δ′ from which three consecutive samples agree.
inline CrossingReport crossing_numbers(const HessianPath& path, double lambda_star, double delta,
                                       const CrossingSettings& settings = {}) {
    if (!(delta > 0.0)) throw ArgumentError("δ must be positive");
    if (settings.steps < 3) throw ArgumentError("crossing needs at least 3 samples per side");

    const SymmetricOperator b_star(path(lambda_star));
    Eigen::SelfAdjointEigenSolver<Matrix> es(b_star.matrix(), Eigen::EigenvaluesOnly);
    const Vector eig_star = es.eigenvalues();

    CrossingReport rep;
    rep.lambda_star = lambda_star;
    rep.eps_null = settings.eps_null > 0.0 ? settings.eps_null : default_null_tol(b_star);
    const MorseData m_star = morse_data_from_eigenvalues(eig_star, rep.eps_null);
    rep.mu_star = m_star.mu;
    rep.nu_star = m_star.nu;
    rep.conditions.degenerate_at_star = m_star.nu > 0;
    if (m_star.nu == 0) {
        throw NoCandidateError("B(0) at λ* = " + std::to_string(lambda_star) + " is nondegenerate");
    }

    if (settings.eps_track > 0.0) {
        rep.eps_track = settings.eps_track;
    } else {
        double smallest = std::numeric_limits<double>::infinity();
        for (double e : eig_star) {
            if (std::abs(e) > rep.eps_null) smallest = std::min(smallest, std::abs(e));
        }
        rep.eps_track = 0.5 * smallest;
    }

    auto sample = [&](double lambda) {
        const SymmetricOperator b(path(lambda));
        Eigen::SelfAdjointEigenSolver<Matrix> s_es(b.matrix(), Eigen::EigenvaluesOnly);
        CrossingSample s;
        s.lambda = lambda;
        for (double e : s_es.eigenvalues()) {
            if (std::abs(e) < rep.eps_track) {
                s.eig0.push_back(e);
                if (e < 0.0) ++s.r;
            }
        }
        const MorseData m = morse_data_from_eigenvalues(s_es.eigenvalues(), rep.eps_null);
        s.mu = m.mu;
        s.nu = m.nu;
        s.distance_to_star = (b - b_star).norm();
        return s;
    };
    for (int k = 1; k <= settings.steps; ++k) {
        const double offset = delta * k / settings.steps;
        rep.right.push_back(sample(lambda_star + offset));
        rep.left.push_back(sample(lambda_star - offset));
    }

    const int kr = detail::stabilized_index(rep.right);
    const int kl = detail::stabilized_index(rep.left);
    if (kr < 0 || kl < 0) {
        throw InconclusiveCrossingError("crossing counts near λ* = " + std::to_string(lambda_star) +
                                        " did not stabilize; shrink δ");
    }
    rep.r_plus = rep.right[static_cast<std::size_t>(kr)].r;
    rep.r_minus = rep.left[static_cast<std::size_t>(kl)].r;
    rep.delta_plus = rep.right[static_cast<std::size_t>(kr)].lambda - lambda_star;
    rep.delta_minus = lambda_star - rep.left[static_cast<std::size_t>(kl)].lambda;
    if (rep.r_plus > rep.nu_star || rep.r_minus > rep.nu_star) {
        throw InconclusiveCrossingError("ε_track admits more eigenvalues than dim Ker B_{λ*}(0); shrink ε_track");
    }
    rep.parity = parity_from_counts(rep.r_plus, rep.r_minus);

    bool trivial = true;
    for (const auto* side : {&rep.left, &rep.right}) {
        for (const auto& s : *side) trivial = trivial && s.nu == 0;
    }
    rep.conditions.kernel_trivial_nearby = trivial;
    const double slack = 1e-12 * (1.0 + b_star.norm());
    rep.conditions.continuous_at_star =
        detail::monotone_distances(rep.left, slack) && detail::monotone_distances(rep.right, slack);
    rep.conditions.counts_differ = rep.r_plus != rep.r_minus;
    return rep;
}

struct Theorem35Check {
    CrossingReport report;
    bool verdict = false; ///< all of (v)–(viii): bifurcation predicted at λ*
};

inline Theorem35Check check_theorem_3_5(const HessianPath& path, double lambda_star, double delta,
                                        const CrossingSettings& settings = {}) {
    Theorem35Check c;
    c.report = crossing_numbers(path, lambda_star, delta, settings);
    const auto& f = c.report.conditions;
    c.verdict = f.kernel_trivial_nearby && f.continuous_at_star && f.degenerate_at_star && f.counts_differ;
    return c;
}

} // namespace bifurcata
