#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bifurcata/model.hpp"

namespace bifurcata {

/// Ascending eigenvalues with orthonormal eigenvectors (column i pairs with eigenvalue i).
struct SpectralData {
    Vector eigenvalues;
    Matrix eigenvectors;
    double null_tol = 0.0;
};

struct MorseData {
    int mu = 0; ///< eigenvalues < −ε_null
    int nu = 0; ///< |eigenvalue| ≤ ε_null
    int pi = 0; ///< eigenvalues > ε_null

    bool operator==(const MorseData&) const = default;
};

/// 1e-8 · (1 + spectral radius).
inline double default_null_tol(const Matrix& s) { return 1e-8 * (1.0 + SymmetricOperator(s).norm()); }
inline double default_null_tol(const SymmetricOperator& s) { return 1e-8 * (1.0 + s.norm()); }

/// The first component with |entry| > 1e-8 of every column is made positive.
inline void normalize_signs(Matrix& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            if (std::abs(vectors(r, c)) > 1e-8) {
                if (vectors(r, c) < 0.0) vectors.col(c) *= -1.0;
                break;
            }
        }
    }
}

inline SpectralData eigendecompose(const SymmetricOperator& s, double null_tol) {
    if (!(null_tol > 0.0)) throw ArgumentError("null tolerance must be positive");
    SpectralData d;
    d.null_tol = null_tol;
    if (s.dim() == 0) return d;
    Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
    if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
    d.eigenvalues = es.eigenvalues();
    d.eigenvectors = es.eigenvectors();
    normalize_signs(d.eigenvectors);
    return d;
}

inline SpectralData eigendecompose(const Matrix& s, double null_tol) {
    return eigendecompose(SymmetricOperator(s), null_tol);
}

inline MorseData morse_data_from_eigenvalues(const Vector& eigenvalues, double null_tol) {
    MorseData m;
    for (double e : eigenvalues) {
        if (e < -null_tol) {
            ++m.mu;
        } else if (e > null_tol) {
            ++m.pi;
        } else {
            ++m.nu;
        }
    }
    return m;
}

inline MorseData morse_data(const SymmetricOperator& s, double null_tol) {
    if (!(null_tol > 0.0)) throw ArgumentError("null tolerance must be positive");
    if (s.dim() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix(), Eigen::EigenvaluesOnly);
    return morse_data_from_eigenvalues(es.eigenvalues(), null_tol);
}

inline MorseData morse_data(const Matrix& s, double null_tol) { return morse_data(SymmetricOperator(s), null_tol); }
inline MorseData morse_data(const Matrix& s) { return morse_data(s, default_null_tol(s)); }

/// Orthonormal basis of the column span via thin Householder QR.
inline Matrix orthonormalize(const Matrix& columns) {
    if (columns.cols() == 0) return Matrix(columns.rows(), 0);
    Eigen::HouseholderQR<Matrix> qr(columns);
    Matrix q = qr.householderQ() * Matrix::Identity(columns.rows(), columns.cols());
    normalize_signs(q);
    return q;
}

enum class PencilRoute { PositiveDefiniteBase, CommutingInvertible };

inline std::string to_string(PencilRoute r) {
    return r == PencilRoute::PositiveDefiniteBase ? "positive_definite_base" : "commuting_invertible";
}

/// One eigenspace H_k = Ker(B(0) − λ_k B̂(0)) with the inertia of B(0) restricted to it.
struct PencilEigenspace {
    double lambda = 0.0;
    Matrix basis;
    int dim_plus = 0;
    int dim_minus = 0;

    int dim() const { return static_cast<int>(basis.cols()); }
};

struct GeneralizedEigenData {
    std::vector<PencilEigenspace> spaces; ///< ascending λ_k
    Matrix kernel_of_hat;                 ///< H₀ = Ker(B̂(0))
    PencilRoute route = PencilRoute::PositiveDefiniteBase;
    double cluster_tol = 1e-8;

    std::vector<double> lambdas() const {
        std::vector<double> out;
        for (const auto& s : spaces) out.push_back(s.lambda);
        return out;
    }
    int total_dim() const {
        int d = static_cast<int>(kernel_of_hat.cols());
        for (const auto& s : spaces) d += s.dim();
        return d;
    }
};

namespace detail {

struct EigenCluster {
    double lambda;
    std::vector<Eigen::Index> columns;
};

/// Groups reciprocal eigenvalues 1/η of L into clusters within 1e-8·(1+|λ|); |η| ≤ zero_tol goes to the kernel.
inline std::vector<EigenCluster> cluster_reciprocals(const Vector& eta, double zero_tol, std::vector<Eigen::Index>& kernel) {
    std::vector<std::pair<double, Eigen::Index>> finite;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (std::abs(eta(i)) <= zero_tol) {
            kernel.push_back(i);
        } else {
            finite.emplace_back(1.0 / eta(i), i);
        }
    }
    std::sort(finite.begin(), finite.end());
    std::vector<EigenCluster> clusters;
    for (const auto& [lam, idx] : finite) {
        if (!clusters.empty()) {
            auto& last = clusters.back();
            if (std::abs(lam - last.lambda) <= 1e-8 * (1.0 + std::abs(last.lambda))) {
                last.columns.push_back(idx);
                continue;
            }
        }
        clusters.push_back({lam, {idx}});
    }
    for (auto& c : clusters) {
        double sum = 0.0;
        for (auto idx : c.columns) sum += 1.0 / eta(idx);
        c.lambda = sum / static_cast<double>(c.columns.size());
    }
    return clusters;
}

inline Matrix gather(const Matrix& m, const std::vector<Eigen::Index>& cols) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
    return out;
}

inline std::pair<int, int> inertia_on(const Matrix& op, const Matrix& basis, double tol) {
    if (basis.cols() == 0) return {0, 0};
    const Matrix restricted = basis.transpose() * op * basis;
    const MorseData m = morse_data(Matrix(0.5 * (restricted + restricted.transpose())), tol);
    return {m.pi, m.mu};
}

} // namespace detail

inline bool operators_commute(const Matrix& a, const Matrix& b, double rel_tol = 1e-10) {
    const double scale = (1.0 + SymmetricOperator::max_abs(a)) * (1.0 + SymmetricOperator::max_abs(b));
    return SymmetricOperator::max_abs(Matrix(a * b - b * a)) <= rel_tol * scale;
}

/// Finite eigenvalues of B(0)v = λB̂(0)v with eigenspaces, via
/// u − λ J B̂ J u = 0 (J = B(0)^{−1/2}) when B(0) is positive definite, or via
/// L = B(0)^{−1} B̂(0) when B(0) is invertible and commutes with B̂(0).
inline GeneralizedEigenData generalized_eigenvalues(const PencilFamily& pencil, double eps = 0.0) {
    if (pencil.num_params() != 1) throw ArgumentError("generalized eigenvalues need a one-parameter pencil");
    const Matrix& base = pencil.base.matrix();
    const Matrix& hat = pencil.hats[0].matrix();
    const Eigen::Index n = pencil.dim();

    Eigen::SelfAdjointEigenSolver<Matrix> base_es(base);
    const Vector& b_eigs = base_es.eigenvalues();
    const double base_tol = default_null_tol(pencil.base);

    auto finish = [&](const Matrix& l_op, const Matrix& lift, PencilRoute route) {
        const Matrix l_sym = 0.5 * (l_op + l_op.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> les(l_sym);
        const Vector& eta = les.eigenvalues();
        const double zero_tol = eps > 0.0 ? eps : 1e-8 * (1.0 + eta.cwiseAbs().maxCoeff());
        std::vector<Eigen::Index> kernel;
        auto clusters = detail::cluster_reciprocals(eta, zero_tol, kernel);

        GeneralizedEigenData g;
        g.route = route;
        const Matrix vecs = lift * les.eigenvectors();
        g.kernel_of_hat = orthonormalize(detail::gather(vecs, kernel));
        for (const auto& c : clusters) {
            PencilEigenspace space;
            space.lambda = c.lambda;
            space.basis = orthonormalize(detail::gather(vecs, c.columns));
            std::tie(space.dim_plus, space.dim_minus) = detail::inertia_on(base, space.basis, base_tol);
            g.spaces.push_back(std::move(space));
        }
        return g;
    };

    if (n > 0 && b_eigs.minCoeff() > base_tol) {
        const Vector inv_sqrt = b_eigs.array().rsqrt();
        const Matrix j = base_es.eigenvectors() * inv_sqrt.asDiagonal() * base_es.eigenvectors().transpose();
        return finish(Matrix(j * hat * j), j, PencilRoute::PositiveDefiniteBase);
    }
    if (n == 0 || b_eigs.cwiseAbs().minCoeff() <= base_tol) {
        throw UnsupportedPencilError("base operator is not invertible");
    }
    if (!operators_commute(base, hat)) {
        throw UnsupportedPencilError("indefinite base does not commute with the hat operator");
    }
    const Matrix l_op = base_es.eigenvectors() * b_eigs.cwiseInverse().asDiagonal() *
                        base_es.eigenvectors().transpose() * hat;
    return finish(l_op, Matrix::Identity(n, n), PencilRoute::CommutingInvertible);
}

/// μ_λ = Σ_{λ_k < λ} dim H_k.
inline int morse_index_spd(const GeneralizedEigenData& g, double lambda) {
    int mu = 0;
    for (const auto& s : g.spaces) {
        if (s.lambda < lambda) mu += s.dim();
    }
    return mu;
}

/// μ_λ = Σ_{λ_k < λ} dim H_k⁺ + Σ_{λ_k > λ} dim H_k⁻, evaluated as written
/// (the H₀ block contributes nothing).
inline int morse_index_signed(const GeneralizedEigenData& g, double lambda) {
    int mu = 0;
    for (const auto& s : g.spaces) {
        if (s.lambda < lambda) mu += s.dim_plus;
        if (s.lambda > lambda) mu += s.dim_minus;
    }
    return mu;
}

inline const PencilEigenspace* find_eigenspace(const GeneralizedEigenData& g, double lambda_star) {
    for (const auto& s : g.spaces) {
        if (std::abs(s.lambda - lambda_star) <= 1e-8 * (1.0 + std::abs(lambda_star))) return &s;
    }
    return nullptr;
}

/// True iff no other λ_k, nor λ₀ = 0 when H₀ ≠ {0}, lies within `gap` of λ*.
inline bool is_isolated_eigenvalue(const GeneralizedEigenData& g, double lambda_star, double gap) {
    const PencilEigenspace* own = find_eigenspace(g, lambda_star);
    if (own == nullptr) throw ArgumentError("λ* = " + std::to_string(lambda_star) + " is not a generalized eigenvalue");
    for (const auto& s : g.spaces) {
        if (&s != own && std::abs(s.lambda - lambda_star) < gap) return false;
    }
    if (g.kernel_of_hat.cols() > 0 && std::abs(lambda_star) < gap) return false;
    return true;
}

} // namespace bifurcata
