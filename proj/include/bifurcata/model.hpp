#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bifurcata/errors.hpp"

namespace bifurcata {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Vector scalar_param(double lambda) { return Vector::Constant(1, lambda); }

/// Dense real symmetric matrix. Construction rejects matrices whose
/// asymmetry exceeds 1e-12 · (1 + max|entry|); the stored matrix is exactly
/// symmetric (averaged with its transpose).
class SymmetricOperator {
public:
    SymmetricOperator() = default;

    explicit SymmetricOperator(const Matrix& entries) {
        if (entries.rows() != entries.cols()) {
            throw ArgumentError("symmetric operator must be square");
        }
        if (symmetry_defect(entries) > 1e-12 * (1.0 + max_abs(entries))) {
            throw ArgumentError("operator is not symmetric");
        }
        entries_ = 0.5 * (entries + entries.transpose());
    }

    static SymmetricOperator diagonal(std::initializer_list<double> values) {
        Vector d(static_cast<Eigen::Index>(values.size()));
        Eigen::Index i = 0;
        for (double v : values) d(i++) = v;
        return SymmetricOperator(Matrix(d.asDiagonal()));
    }

    static double symmetry_defect(const Matrix& m) {
        return m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
    }

    static double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

    const Matrix& matrix() const noexcept { return entries_; }
    Eigen::Index dim() const noexcept { return entries_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

    /// Spectral norm, which for a symmetric matrix is the largest |eigenvalue|.
    double norm() const {
        if (entries_.size() == 0) return 0.0;
        Eigen::SelfAdjointEigenSolver<Matrix> es(entries_, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }

    friend SymmetricOperator operator-(const SymmetricOperator& a, const SymmetricOperator& b) {
        return SymmetricOperator(Matrix(a.entries_ - b.entries_));
    }
    friend SymmetricOperator operator+(const SymmetricOperator& a, const SymmetricOperator& b) {
        return SymmetricOperator(Matrix(a.entries_ + b.entries_));
    }
    friend SymmetricOperator operator*(double s, const SymmetricOperator& a) {
        return SymmetricOperator(Matrix(s * a.entries_));
    }

private:
    Matrix entries_;
};

/// Parameterized potential F(λ⃗, u) on ℝⁿ with analytic gradient and Hessian.
/// Instances are immutable after construction; the callables must be pure.
struct PotentialFamily {
    using ValueFn = std::function<double(const Vector&, const Vector&)>;
    using GradientFn = std::function<Vector(const Vector&, const Vector&)>;
    using HessianFn = std::function<Matrix(const Vector&, const Vector&)>;

    Eigen::Index dim_state = 0;
    Eigen::Index dim_param = 1;
    ValueFn value_fn;
    GradientFn gradient_fn;
    HessianFn hessian_fn;
    std::string name;
    std::string description;

    void check_args(const Vector& lambda, const Vector& u) const {
        if (lambda.size() != dim_param) {
            throw ArgumentError("parameter vector has length " + std::to_string(lambda.size()) +
                                ", family '" + name + "' expects " + std::to_string(dim_param));
        }
        if (u.size() != dim_state) {
            throw ArgumentError("state vector has length " + std::to_string(u.size()) +
                                ", family '" + name + "' expects " + std::to_string(dim_state));
        }
    }

    double value(const Vector& lambda, const Vector& u) const {
        check_args(lambda, u);
        return value_fn(lambda, u);
    }
    Vector gradient(const Vector& lambda, const Vector& u) const {
        check_args(lambda, u);
        return gradient_fn(lambda, u);
    }
    double value(double lambda, const Vector& u) const { return value(scalar_param(lambda), u); }
    Vector gradient(double lambda, const Vector& u) const { return gradient(scalar_param(lambda), u); }

    /// B_λ(0), the Hessian along the trivial branch.
    Matrix hessian_at_zero(const Vector& lambda) const {
        check_args(lambda, Vector::Zero(dim_state));
        return hessian_fn(lambda, Vector::Zero(dim_state));
    }
};

inline SymmetricOperator eval_hessian(const PotentialFamily& family, const Vector& lambda, const Vector& u) {
    family.check_args(lambda, u);
    return SymmetricOperator(family.hessian_fn(lambda, u));
}

inline SymmetricOperator eval_hessian(const PotentialFamily& family, double lambda, const Vector& u) {
    return eval_hessian(family, scalar_param(lambda), u);
}

/// B(0) − Σ λ_j B̂_j(0).
struct PencilFamily {
    SymmetricOperator base;
    std::vector<SymmetricOperator> hats;

    PencilFamily() = default;
    PencilFamily(SymmetricOperator b, std::vector<SymmetricOperator> h) : base(std::move(b)), hats(std::move(h)) {
        if (hats.empty()) throw ArgumentError("pencil needs at least one hat operator");
        for (const auto& hat : hats) {
            if (hat.dim() != base.dim()) throw ArgumentError("pencil operators differ in dimension");
        }
    }

    Eigen::Index dim() const noexcept { return base.dim(); }
    Eigen::Index num_params() const noexcept { return static_cast<Eigen::Index>(hats.size()); }

    Matrix at(const Vector& lambda) const {
        if (lambda.size() != num_params()) throw ArgumentError("pencil parameter length mismatch");
        Matrix m = base.matrix();
        for (Eigen::Index j = 0; j < lambda.size(); ++j) m -= lambda(j) * hats[static_cast<std::size_t>(j)].matrix();
        return m;
    }
    Matrix at(double lambda) const { return at(scalar_param(lambda)); }
};

/// F(λ⃗, u) = ½ uᵀ (B − Σ λ_j B̂_j) u plus an optional separable quartic ¼ c Σ u_i⁴.
inline PotentialFamily make_pencil_family(const PencilFamily& pencil, double quartic = 0.0,
                                          std::string name = "pencil") {
    PotentialFamily f;
    f.dim_state = pencil.dim();
    f.dim_param = pencil.num_params();
    f.name = std::move(name);
    f.description = "quadratic pencil family";
    f.value_fn = [pencil, quartic](const Vector& lambda, const Vector& u) {
        return 0.5 * u.dot(pencil.at(lambda) * u) + 0.25 * quartic * u.array().pow(4).sum();
    };
    f.gradient_fn = [pencil, quartic](const Vector& lambda, const Vector& u) -> Vector {
        return pencil.at(lambda) * u + quartic * u.array().pow(3).matrix();
    };
    f.hessian_fn = [pencil, quartic](const Vector& lambda, const Vector& u) -> Matrix {
        Matrix h = pencil.at(lambda);
        h.diagonal() += 3.0 * quartic * u.array().square().matrix();
        return h;
    };
    return f;
}

/// Recovers the pencil when B_λ⃗(0) is affine in λ⃗; nullopt otherwise.
inline std::optional<PencilFamily> extract_pencil(const PotentialFamily& family, double rel_tol = 1e-10) {
    const Eigen::Index p = family.dim_param;
    const Matrix base = family.hessian_at_zero(Vector::Zero(p));
    std::vector<SymmetricOperator> hats;
    for (Eigen::Index j = 0; j < p; ++j) {
        hats.emplace_back(Matrix(base - family.hessian_at_zero(Vector::Unit(p, j))));
    }
    PencilFamily pencil(SymmetricOperator(base), std::move(hats));

    std::vector<Vector> probes;
    for (Eigen::Index j = 0; j < p; ++j) {
        probes.push_back(2.0 * Vector::Unit(p, j));
        probes.push_back(-1.5 * Vector::Unit(p, j));
    }
    probes.push_back(Vector::Constant(p, 0.75));
    const double scale = 1.0 + SymmetricOperator::max_abs(base);
    for (const auto& probe : probes) {
        const Matrix diff = family.hessian_at_zero(probe) - pencil.at(probe);
        if (SymmetricOperator::max_abs(diff) > rel_tol * scale * (1.0 + probe.cwiseAbs().maxCoeff())) {
            return std::nullopt;
        }
    }
    return pencil;
}

/// One-parameter family t ↦ F(λ⃗* + t(μ⃗ − λ⃗*), ·); t = 0 is λ⃗*.
inline PotentialFamily restrict_to_line(const PotentialFamily& family, const Vector& lambda_star, const Vector& mu) {
    if (lambda_star.size() != family.dim_param || mu.size() != family.dim_param) {
        throw ArgumentError("line endpoints must have the family's parameter dimension");
    }
    PotentialFamily line;
    line.dim_state = family.dim_state;
    line.dim_param = 1;
    line.name = family.name + "@line";
    line.description = "restriction of " + family.name + " to a parameter line";
    const Vector direction = mu - lambda_star;
    auto map = [lambda_star, direction](const Vector& t) -> Vector { return lambda_star + t(0) * direction; };
    line.value_fn = [family, map](const Vector& t, const Vector& u) { return family.value_fn(map(t), u); };
    line.gradient_fn = [family, map](const Vector& t, const Vector& u) { return family.gradient_fn(map(t), u); };
    line.hessian_fn = [family, map](const Vector& t, const Vector& u) { return family.hessian_fn(map(t), u); };
    return line;
}

struct ConsistencyReport {
    double gradient_rel_error = 0.0;
    double hessian_rel_error = 0.0;
};

/// Central-difference check of gradient_fn against value_fn and of
/// hessian_fn against gradient_fn. Errors are ‖fd − analytic‖∞ / max(1, ‖analytic‖∞).
inline ConsistencyReport check_gradient_consistency(const PotentialFamily& family, const Vector& lambda,
                                                    const Vector& u, double h = 1e-5) {
    family.check_args(lambda, u);
    const Eigen::Index n = family.dim_state;
    const Vector g = family.gradient_fn(lambda, u);
    const Matrix hess = family.hessian_fn(lambda, u);
    Vector g_fd(n);
    Matrix h_fd(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector up = u, dn = u;
        up(i) += h;
        dn(i) -= h;
        g_fd(i) = (family.value_fn(lambda, up) - family.value_fn(lambda, dn)) / (2.0 * h);
        h_fd.col(i) = (family.gradient_fn(lambda, up) - family.gradient_fn(lambda, dn)) / (2.0 * h);
    }
    ConsistencyReport r;
    r.gradient_rel_error = (g_fd - g).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff());
    r.hessian_rel_error = (h_fd - hess).cwiseAbs().maxCoeff() / std::max(1.0, hess.cwiseAbs().maxCoeff());
    return r;
}

/// Samples F(λ⃗, u) = F(λ⃗, −u) at deterministic pseudo-random points in the unit box.
inline bool is_even_family(const PotentialFamily& family, const Vector& lambda, int samples = 50,
                           double tol = 1e-10, double radius = 1.0) {
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> dist(-radius, radius);
    for (int s = 0; s < samples; ++s) {
        Vector u(family.dim_state);
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = dist(rng);
        const double plus = family.value(lambda, u);
        const double minus = family.value(lambda, Vector(-u));
        if (std::abs(plus - minus) > tol * (1.0 + std::abs(plus))) return false;
    }
    return true;
}

} // namespace bifurcata
