#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bifurcata/spectral.hpp"

namespace bifurcata {

struct NewtonSettings {
    double tau_psi = 0.0; ///< 0 selects 1e-11·(1 + ‖∇F(λ⃗, Zz)‖)
    int max_iterations = 50;
    int max_halvings = 30;
    int polish_steps = 3; ///< full Newton steps taken after τ_ψ is met, while the residual still drops
};

struct PsiSolution {
    Vector z;
    Vector lambda;
    Vector w;            ///< ψ(λ⃗, z) in W coordinates
    double residual = 0.0;
    int iterations = 0;

    Vector psi(const Matrix& complement) const { return complement * w; }
};

namespace detail {

/// Bounded FIFO of previous ψ solves, keyed by (λ⃗, z) quantized to 1e-12.
class PsiCache {
public:
    static constexpr std::size_t capacity = 64;

    std::vector<std::int64_t> key(const Vector& lambda, const Vector& z) const {
        std::vector<std::int64_t> k;
        k.reserve(static_cast<std::size_t>(lambda.size() + z.size()));
        for (double v : lambda) k.push_back(std::llround(v * 1e12));
        for (double v : z) k.push_back(std::llround(v * 1e12));
        return k;
    }

    std::optional<PsiSolution> exact(const Vector& lambda, const Vector& z) const {
        const auto k = key(lambda, z);
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& e : entries_) {
            if (e.first == k) return e.second;
        }
        return std::nullopt;
    }

    /// w of the cached solve closest to (λ⃗, z), if any.
    std::optional<Vector> nearest(const Vector& lambda, const Vector& z) const {
        std::lock_guard<std::mutex> lock(mutex_);
        double best = std::numeric_limits<double>::infinity();
        std::optional<Vector> out;
        for (const auto& [k, s] : entries_) {
            const double d = (s.lambda - lambda).squaredNorm() + (s.z - z).squaredNorm();
            if (d < best) {
                best = d;
                out = s.w;
            }
        }
        return out;
    }

    void store(const PsiSolution& s) {
        auto k = key(s.lambda, s.z);
        std::lock_guard<std::mutex> lock(mutex_);
        if (entries_.size() >= capacity) entries_.pop_front();
        entries_.emplace_back(std::move(k), s);
    }

private:
    mutable std::mutex mutex_;
    std::deque<std::pair<std::vector<std::int64_t>, PsiSolution>> entries_;
};

} // namespace detail

/// Lyapunov–Schmidt data at λ⃗*: kernel basis Z of B_{λ⃗*}(0) and its orthogonal complement W.
struct ReducedModel {
    PotentialFamily family;
    Vector lambda_star;
    Matrix kernel_basis;       ///< Z, n×d
    Matrix complement_basis;   ///< W, n×(n−d)
    Vector complement_eigenvalues; ///< eigenvalues of B_{λ⃗*}(0) on W
    double eps_null = 0.0;
    NewtonSettings newton;
    double trust_radius = 0.0; ///< ρ_z
    std::shared_ptr<detail::PsiCache> cache = std::make_shared<detail::PsiCache>();

    Eigen::Index kernel_dim() const { return kernel_basis.cols(); }
    Eigen::Index dim() const { return family.dim_state; }
    Vector lift(const Vector& z, const Vector& w) const { return kernel_basis * z + complement_basis * w; }
};

/// 0.1·min|nonzero eigenvalue of B_{λ⃗*}(0)| / L_B, where L_B is the largest
/// ‖B(u) − B(0)‖/‖u‖ over probes u = ±0.1·(columns of Z and W). Capped at 1.
inline double default_trust_radius(const PotentialFamily& family, const Vector& lambda_star, const Matrix& z_basis,
                                   const Matrix& w_basis, const Vector& complement_eigenvalues) {
    constexpr double probe = 0.1;
    double gap = std::numeric_limits<double>::infinity();
    for (double e : complement_eigenvalues) gap = std::min(gap, std::abs(e));
    if (!std::isfinite(gap)) gap = 1.0; // no complement: only the kernel's own scale matters

    const Vector zero = Vector::Zero(family.dim_state);
    const Matrix b0 = family.hessian_fn(lambda_star, zero);
    double lip = 0.0;
    for (const Matrix* basis : {&z_basis, &w_basis}) {
        for (Eigen::Index c = 0; c < basis->cols(); ++c) {
            for (double s : {probe, -probe}) {
                const Vector u = s * basis->col(c);
                const SymmetricOperator diff(Matrix(family.hessian_fn(lambda_star, u) - b0));
                lip = std::max(lip, diff.norm() / probe);
            }
        }
    }
    if (lip <= 0.0) return 1.0;
    return std::min(1.0, 0.1 * gap / lip);
}

inline ReducedModel build_reduced_model(const PotentialFamily& family, const Vector& lambda_star, double eps_null = 0.0,
                                        const NewtonSettings& newton = {}) {
    const SymmetricOperator b_star(family.hessian_at_zero(lambda_star));
    ReducedModel m;
    m.family = family;
    m.lambda_star = lambda_star;
    m.eps_null = eps_null > 0.0 ? eps_null : default_null_tol(b_star);
    m.newton = newton;
    const SpectralData sd = eigendecompose(b_star, m.eps_null);
    std::vector<Eigen::Index> kernel, rest;
    for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
        (std::abs(sd.eigenvalues(i)) <= m.eps_null ? kernel : rest).push_back(i);
    }
    if (kernel.empty()) {
        throw NondegenerateError("B(0) is nondegenerate at λ* (family '" + family.name + "'); no reduction needed");
    }
    m.kernel_basis = detail::gather(sd.eigenvectors, kernel);
    m.complement_basis = detail::gather(sd.eigenvectors, rest);
    m.complement_eigenvalues.resize(static_cast<Eigen::Index>(rest.size()));
    for (std::size_t k = 0; k < rest.size(); ++k) m.complement_eigenvalues(static_cast<Eigen::Index>(k)) = sd.eigenvalues(rest[k]);
    m.trust_radius = default_trust_radius(family, lambda_star, m.kernel_basis, m.complement_basis, m.complement_eigenvalues);
    return m;
}

inline ReducedModel build_reduced_model(const PotentialFamily& family, double lambda_star, double eps_null = 0.0,
                                        const NewtonSettings& newton = {}) {
    return build_reduced_model(family, scalar_param(lambda_star), eps_null, newton);
}

namespace detail {

inline void check_reduced_args(const ReducedModel& model, const Vector& lambda, const Vector& z) {
    if (lambda.size() != model.family.dim_param) throw ArgumentError("parameter vector has the wrong length");
    if (z.size() != model.kernel_dim()) {
        throw ArgumentError("z has length " + std::to_string(z.size()) + ", kernel dimension is " +
                            std::to_string(model.kernel_dim()));
    }
}

/// Solves (WᵀBW) x = rhs; throws when WᵀBW is numerically singular.
inline Matrix complement_solve(const Matrix& wbw, const Matrix& rhs) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (wbw + wbw.transpose()));
    const Vector& e = es.eigenvalues();
    const double scale = 1.0 + e.cwiseAbs().maxCoeff();
    if (e.cwiseAbs().minCoeff() <= 1e-12 * scale) {
        throw OutsideValidityError("complement Jacobian WᵀBW is singular; outside the implicit-function neighbourhood");
    }
    return es.eigenvectors() * (e.cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * rhs));
}

} // namespace detail

/// Damped Newton on G(w) = Wᵀ∇F(λ⃗, Zz + Ww).
inline PsiSolution solve_psi(const ReducedModel& model, const Vector& lambda, const Vector& z) {
    detail::check_reduced_args(model, lambda, z);
    const Matrix& Z = model.kernel_basis;
    const Matrix& W = model.complement_basis;
    const auto& family = model.family;

    PsiSolution sol;
    sol.z = z;
    sol.lambda = lambda;
    sol.w = Vector::Zero(W.cols());
    if (z.isZero(0.0) || W.cols() == 0) {
        // ψ(λ⃗, 0) = 0; with W = {} nothing is solved
        sol.residual = W.cols() == 0 ? 0.0 : (W.transpose() * family.gradient_fn(lambda, model.lift(z, sol.w))).norm();
        return sol;
    }
    if (auto hit = model.cache->exact(lambda, z)) return *hit;

    const Vector base_point = Z * z;
    const double tau = model.newton.tau_psi > 0.0
                           ? model.newton.tau_psi
                           : 1e-11 * (1.0 + family.gradient_fn(lambda, base_point).norm());
    auto residual = [&](const Vector& w) -> Vector { return W.transpose() * family.gradient_fn(lambda, base_point + W * w); };

    auto attempt = [&](Vector w, std::vector<double>& trace) -> std::optional<PsiSolution> {
        Vector g = residual(w);
        double r = g.norm();
        trace.push_back(r);
        for (int it = 0; it <= model.newton.max_iterations; ++it) {
            if (r <= tau) {
                // a few extra full steps while they still help; leftover error in ψ
                // otherwise shows up as spurious reduced roots of size ~√τ
                for (int k = 0; k < model.newton.polish_steps && r > 0.0; ++k) {
                    const Matrix hp = family.hessian_fn(lambda, base_point + W * w);
                    const Vector trial = w - detail::complement_solve(W.transpose() * hp * W, g);
                    const Vector g_trial = residual(trial);
                    if (!(g_trial.norm() < r)) break;
                    w = trial;
                    g = g_trial;
                    r = g.norm();
                    trace.push_back(r);
                }
                PsiSolution s = sol;
                s.w = w;
                s.residual = r;
                s.iterations = it;
                return s;
            }
            if (it == model.newton.max_iterations) break;
            const Matrix hess = family.hessian_fn(lambda, base_point + W * w);
            const Vector step = -detail::complement_solve(W.transpose() * hess * W, g);
            double t = 1.0;
            Vector trial = w + step;
            Vector g_trial = residual(trial);
            int halvings = 0;
            while (!(g_trial.norm() < r) && halvings < model.newton.max_halvings) {
                t *= 0.5;
                trial = w + t * step;
                g_trial = residual(trial);
                ++halvings;
            }
            if (!(g_trial.norm() < r)) break; // no descent left
            w = trial;
            g = g_trial;
            r = g.norm();
            trace.push_back(r);
        }
        return std::nullopt;
    };

    std::vector<double> trace;
    std::optional<PsiSolution> out;
    if (auto warm = model.cache->nearest(lambda, z)) out = attempt(*warm, trace);
    if (!out) out = attempt(Vector::Zero(W.cols()), trace);
    if (!out) {
        throw ReductionFailedError("ψ Newton solve did not reach τ_ψ = " + std::to_string(tau), std::move(trace));
    }
    model.cache->store(*out);
    return *out;
}

inline PsiSolution solve_psi(const ReducedModel& model, double lambda, const Vector& z) {
    return solve_psi(model, scalar_param(lambda), z);
}

/// L°_λ(z) = F(λ⃗, Zz + ψ(λ⃗, z)).
inline double reduced_value(const ReducedModel& model, const Vector& lambda, const Vector& z) {
    const PsiSolution s = solve_psi(model, lambda, z);
    return model.family.value_fn(lambda, model.lift(z, s.w));
}

/// Zᵀ∇F(λ⃗, Zz + Ww).
inline Vector reduced_gradient(const ReducedModel& model, const Vector& lambda, const Vector& z) {
    const PsiSolution s = solve_psi(model, lambda, z);
    return model.kernel_basis.transpose() * model.family.gradient_fn(lambda, model.lift(z, s.w));
}

namespace detail {

inline Matrix schur_on_kernel(const ReducedModel& model, const Matrix& b) {
    const Matrix& Z = model.kernel_basis;
    const Matrix& W = model.complement_basis;
    Matrix zbz = Z.transpose() * b * Z;
    if (W.cols() > 0) {
        const Matrix wbz = W.transpose() * b * Z;
        zbz -= wbz.transpose() * complement_solve(W.transpose() * b * W, wbz);
    }
    return 0.5 * (zbz + zbz.transpose());
}

} // namespace detail

/// Zᵀ[B − BW(WᵀBW)⁻¹WᵀB]Z with B evaluated at the lifted point: the exact Hessian of L°_λ at z.
inline Matrix reduced_hessian(const ReducedModel& model, const Vector& lambda, const Vector& z) {
    const PsiSolution s = solve_psi(model, lambda, z);
    return detail::schur_on_kernel(model, model.family.hessian_fn(lambda, model.lift(z, s.w)));
}

inline SymmetricOperator reduced_hessian_at_zero(const ReducedModel& model, const Vector& lambda) {
    detail::check_reduced_args(model, lambda, Vector::Zero(model.kernel_dim()));
    return SymmetricOperator(detail::schur_on_kernel(model, model.family.hessian_at_zero(lambda)));
}

inline SymmetricOperator reduced_hessian_at_zero(const ReducedModel& model, double lambda) {
    return reduced_hessian_at_zero(model, scalar_param(lambda));
}

/// d_zψ(λ⃗, 0) = −(WᵀBW)⁻¹WᵀBZ with B = B_λ⃗(0), in W coordinates.
inline Matrix dpsi_at_zero(const ReducedModel& model, const Vector& lambda) {
    detail::check_reduced_args(model, lambda, Vector::Zero(model.kernel_dim()));
    const Matrix& W = model.complement_basis;
    if (W.cols() == 0) return Matrix(0, model.kernel_dim());
    const Matrix b = model.family.hessian_at_zero(lambda);
    return -detail::complement_solve(W.transpose() * b * W, W.transpose() * b * model.kernel_basis);
}

inline Matrix dpsi_at_zero(const ReducedModel& model, double lambda) { return dpsi_at_zero(model, scalar_param(lambda)); }

struct QForm {
    Matrix matrix;
    int index = 0;   ///< negative eigenvalues
    int coindex = 0; ///< positive eigenvalues
    bool commuting = true;

    bool definite() const { return matrix.rows() > 0 && (index == matrix.rows() || coindex == matrix.rows()); }
};

/// Q_λ⃗(z₁, z₂) = Σ_j (λ_j − λ*_j)(B̂_j z₁, z₂) on the kernel. When 𝔅_{λ⃗*} fails to
/// commute with some B̂_j, z₁ is replaced by z₁ + D_zψ(λ⃗, 0)[z₁] (no extra sign)
/// and the result symmetrized.
inline QForm parameter_form_Q(const PencilFamily& pencil, const ReducedModel& model, const Vector& lambda) {
    if (lambda.size() != pencil.num_params() || model.lambda_star.size() != pencil.num_params()) {
        throw ArgumentError("parameter vector does not match the pencil");
    }
    if (pencil.dim() != model.dim()) throw ArgumentError("pencil and model dimensions differ");
    const Matrix& Z = model.kernel_basis;
    const Matrix& W = model.complement_basis;
    const Matrix b_star = pencil.at(model.lambda_star);

    QForm q;
    for (const auto& hat : pencil.hats) q.commuting = q.commuting && operators_commute(b_star, hat.matrix());

    Matrix right = Z;
    if (!q.commuting && W.cols() > 0) {
        const Matrix b = pencil.at(lambda);
        right = Z - W * detail::complement_solve(W.transpose() * b * W, W.transpose() * b * Z);
    }
    q.matrix = Matrix::Zero(Z.cols(), Z.cols());
    for (Eigen::Index j = 0; j < pencil.num_params(); ++j) {
        const double dl = lambda(j) - model.lambda_star(j);
        q.matrix += dl * (Z.transpose() * pencil.hats[static_cast<std::size_t>(j)].matrix() * right);
    }
    q.matrix = 0.5 * (q.matrix + q.matrix.transpose());
    const MorseData md = morse_data(q.matrix, default_null_tol(q.matrix));
    q.index = md.mu;
    q.coindex = md.pi;
    return q;
}

} // namespace bifurcata
