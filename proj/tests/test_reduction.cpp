#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "bifurcata/detector.hpp"
#include "bifurcata/problems.hpp"
#include "oracles.hpp"

using namespace bifurcata;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

Vector z1(double z) { return vec({z}); }

/// ½(1−λ)u₁² + u₁u₂ + u₂², Hessian [[1−λ, 1], [1, 2]]; singular at λ̂ = 0.5.
PotentialFamily tilted() {
    return make_polynomial_family({1, 2, {{{0}, {2, 0}, 0.5}, {{1}, {2, 0}, -0.5}, {{0}, {1, 1}, 1.0}, {{0}, {0, 2}, 1.0}}},
                                  "tilted");
}

struct Site {
    std::string name;
    Vector lambda_star;
};

std::vector<Site> builtin_sites() {
    const double bvp_l1 = 81.0 * (2.0 - 2.0 * std::cos(M_PI / 9.0)); // (2 − 2cos(πh))/h², h = 1/9
    return {{"pitchfork", vec({1})},       {"mirror_pitchfork", vec({1})}, {"transcritical", vec({1})},
            {"pure_quadratic", vec({1})},  {"coupling", vec({1})},         {"diag12_quartic", vec({1})},
            {"diag12_quartic", vec({2})},  {"double_pitchfork", vec({1})}, {"two_param_diag", vec({1, 1})},
            {"bvp_laplace", vec({bvp_l1})}};
}

} // namespace

TEST(BuildReducedModel, CouplingFamilyBases) {
    const auto m = build_reduced_model(builtin::family("coupling"), 1.0);
    ASSERT_EQ(m.kernel_dim(), 1);
    EXPECT_TRUE(m.kernel_basis.col(0).isApprox(vec({1, 0})));
    EXPECT_TRUE(m.complement_basis.col(0).isApprox(vec({0, 1})));
    Matrix zw(2, 2);
    zw << m.kernel_basis, m.complement_basis;
    EXPECT_LE((zw.transpose() * zw - Matrix::Identity(2, 2)).norm(), 1e-10);
    EXPECT_THROW(build_reduced_model(builtin::family("coupling"), 0.0), NondegenerateError);
}

TEST(BuildReducedModel, BvpLowestMode) {
    const auto f = make_bvp_family({3, {0, 0, 0.5}, {0, 0, 0.5}, 1.0});
    const double h = 0.25, l1 = (2 - 2 * std::cos(M_PI / 4)) / (h * h);
    const auto m = build_reduced_model(f, l1);
    ASSERT_EQ(m.kernel_dim(), 1);
    Vector mode(3);
    for (int i = 0; i < 3; ++i) mode(i) = std::sin(M_PI * (i + 1) * h);
    mode.normalize();
    EXPECT_LE((m.kernel_basis.col(0) - mode).norm(), 1e-8);
    const Matrix b = f.hessian_at_zero(scalar_param(l1));
    EXPECT_LE((b * m.kernel_basis).norm(), m.eps_null * (1 + SymmetricOperator(b).norm()));
}

TEST(SolvePsi, CouplingClosedForm) {
    const auto m = build_reduced_model(builtin::family("coupling"), 1.0);
    const auto s = solve_psi(m, 1.0, z1(0.1));
    EXPECT_NEAR(s.w(0), -0.01, 1e-14);
    EXPECT_LE(s.residual, 1e-11);
    const auto t = solve_psi(m, 0.9, z1(0.2));
    EXPECT_NEAR(t.psi(m.complement_basis)(1), -0.04, 1e-14);
    EXPECT_NEAR(t.psi(m.complement_basis)(0), 0.0, 1e-15);
}

TEST(SolvePsi, ZeroIsExact) {
    for (const auto& site : builtin_sites()) {
        const auto m = build_reduced_model(builtin::family(site.name), site.lambda_star);
        Vector l = site.lambda_star;
        l.array() += 0.05;
        const auto s = solve_psi(m, l, Vector::Zero(m.kernel_dim()));
        EXPECT_EQ(s.w.size() ? s.w.cwiseAbs().maxCoeff() : 0.0, 0.0) << site.name;
        EXPECT_EQ(s.residual, 0.0) << site.name;
    }
}

TEST(SolvePsi, ArgumentErrors) {
    const auto m = build_reduced_model(builtin::family("coupling"), 1.0);
    EXPECT_THROW(solve_psi(m, 1.0, vec({0.1, 0.2})), ArgumentError);
    EXPECT_THROW(solve_psi(m, vec({1, 2}), z1(0.1)), ArgumentError);
}

TEST(SolvePsi, NoRealSolutionFailsWithTrace) {
    // complement equation u₂ + u₂² + z² = 0 has no real root for z² > 1/4
    const auto f = make_polynomial_family(
        {1, 2, {{{0}, {2, 0}, 0.5}, {{1}, {2, 0}, -0.5}, {{0}, {0, 2}, 0.5}, {{0}, {0, 3}, 1.0 / 3.0}, {{0}, {2, 1}, 1.0}}});
    const auto m = build_reduced_model(f, 1.0);
    try {
        solve_psi(m, 1.0, z1(1.0));
        FAIL() << "expected a failure";
    } catch (const ReductionFailedError& e) {
        EXPECT_FALSE(e.residual_trace().empty());
    } catch (const OutsideValidityError&) {
        SUCCEED();
    }
}

TEST(SolvePsi, SingularComplementJacobian) {
    // ∂²F/∂u₂² = 1 − u₁² vanishes at z = 1 while the residual z⁴ does not
    const auto f = make_polynomial_family(
        {1, 2, {{{0}, {2, 0}, 0.5}, {{1}, {2, 0}, -0.5}, {{0}, {0, 2}, 0.5}, {{0}, {2, 2}, -0.5}, {{0}, {4, 1}, 1.0}}});
    const auto m = build_reduced_model(f, 1.0);
    EXPECT_THROW(solve_psi(m, 1.0, z1(1.0)), OutsideValidityError);
}

TEST(SolvePsi, ConcurrentCallsAgree) {
    const auto m = build_reduced_model(builtin::family("coupling"), 1.0);
    std::vector<double> out(8);
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t) {
        pool.emplace_back([&, t] {
            for (int k = 0; k < 200; ++k) solve_psi(m, 1.0 + 0.001 * k, z1(0.01 * (k % 20)));
            out[static_cast<std::size_t>(t)] = solve_psi(m, 0.95, z1(0.15)).w(0);
        });
    }
    for (auto& th : pool) th.join();
    for (double w : out) EXPECT_NEAR(w, -0.0225, 1e-14);
}

TEST(ReducedValue, CouplingClosedForm) {
    // L°_λ(z) = ½(1−λ)z² − ½z⁴
    const auto m = build_reduced_model(builtin::family("coupling"), 1.0);
    EXPECT_NEAR(reduced_value(m, scalar_param(1.0), z1(0.1)), -5e-5, 1e-17);
    EXPECT_NEAR(reduced_value(m, scalar_param(0.5), z1(0.2)), 0.0092, 1e-16);
    EXPECT_EQ(reduced_value(m, scalar_param(0.5), z1(0.0)), 0.0);
}

TEST(ReducedGradient, CouplingClosedForm) {
    const auto m = build_reduced_model(builtin::family("coupling"), 1.0);
    EXPECT_NEAR(reduced_gradient(m, scalar_param(1.0), z1(0.1))(0), -0.002, 1e-16);
    EXPECT_EQ(reduced_gradient(m, scalar_param(1.0), z1(0.0))(0), 0.0);
    EXPECT_EQ(reduced_gradient(m, scalar_param(2.0), z1(0.0))(0), 0.0);
    for (double l : {0.6, 1.0, 1.4}) {
        for (double z : {-0.2, 0.05, 0.17}) {
            EXPECT_NEAR(reduced_gradient(m, scalar_param(l), z1(z))(0), (1 - l) * z - 2 * z * z * z, 1e-15);
        }
    }
}

TEST(ReducedHessianAtZero, CouplingSchurComplement) {
    const auto m = build_reduced_model(builtin::family("coupling"), 1.0);
    EXPECT_NEAR(reduced_hessian_at_zero(m, 1.0)(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(reduced_hessian_at_zero(m, 0.5)(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(reduced_hessian_at_zero(m, 2.0)(0, 0), -1.0, 1e-15);
}

TEST(ReducedHessianAtZero, TiltedFamilyVanishesOnKernel) {
    const auto m = build_reduced_model(tilted(), 0.5);
    ASSERT_EQ(m.kernel_dim(), 1);
    EXPECT_LE((m.kernel_basis.col(0) - vec({2, -1}) / std::sqrt(5.0)).norm(), 1e-12);
    EXPECT_LE(std::abs(reduced_hessian_at_zero(m, 0.5)(0, 0)), 1e-12);
    // det B_λ(0) / (WᵀBW) is the Schur complement of the 2×2 matrix; oracle by hand
    for (double l : {0.2, 0.45, 0.9}) {
        Matrix b(2, 2);
        b << 1 - l, 1, 1, 2;
        const Vector z = m.kernel_basis.col(0), w = m.complement_basis.col(0);
        const double expected = z.dot(b * z) - std::pow(w.dot(b * z), 2) / w.dot(b * w);
        EXPECT_NEAR(reduced_hessian_at_zero(m, l)(0, 0), expected, 1e-13);
    }
}

TEST(ReducedHessian, MatchesFiniteDifferencesOfGradient) {
    const auto m = build_reduced_model(tilted(), 0.5);
    const auto c = build_reduced_model(builtin::family("coupling"), 1.0);
    for (const auto* model : {&m, &c}) {
        for (double l : {0.3, 0.7}) {
            for (double z : {0.0, 0.03, -0.04}) {
                const double fd = oracle::central_diff(
                    [&](double x) { return reduced_gradient(*model, scalar_param(l), z1(x))(0); }, z, 1e-5);
                EXPECT_NEAR(reduced_hessian(*model, scalar_param(l), z1(z))(0, 0), fd, 1e-7);
            }
        }
    }
}

TEST(DpsiAtZero, Examples) {
    const auto c = build_reduced_model(builtin::family("coupling"), 1.0);
    for (double l : {0.0, 1.0, 1.7}) EXPECT_EQ(dpsi_at_zero(c, l)(0, 0), 0.0);
    const auto d = build_reduced_model(builtin::family("pitchfork"), 1.0);
    EXPECT_EQ(dpsi_at_zero(d, 1.0).norm(), 0.0);

    const auto m = build_reduced_model(tilted(), 0.5);
    for (double l : {0.3, 0.5, 0.8}) {
        const double h = 1e-4;
        const double fd = (solve_psi(m, l, z1(h)).w(0) - solve_psi(m, l, z1(-h)).w(0)) / (2 * h);
        EXPECT_NEAR(dpsi_at_zero(m, l)(0, 0), fd, 1e-5);
    }
    EXPECT_NEAR(dpsi_at_zero(m, 0.5)(0, 0), 0.0, 1e-12);
}

TEST(ParameterFormQ, TwoParameterDiagonalExamples) {
    const auto f = builtin::family("two_param_diag");
    const auto pencil = *extract_pencil(f);
    const auto m = build_reduced_model(f, vec({1, 1}));
    ASSERT_EQ(m.kernel_dim(), 2);
    const auto q22 = parameter_form_Q(pencil, m, vec({2, 2}));
    EXPECT_TRUE(q22.commuting);
    EXPECT_EQ(q22.index, 0);
    EXPECT_EQ(q22.coindex, 2);
    EXPECT_TRUE(q22.definite());
    EXPECT_LE((q22.matrix - Matrix::Identity(2, 2)).norm(), 1e-14);

    const auto q20 = parameter_form_Q(pencil, m, vec({2, 0}));
    EXPECT_EQ(q20.index, 1);
    EXPECT_EQ(q20.coindex, 1);
    EXPECT_FALSE(q20.definite());
    EXPECT_NEAR(q20.matrix.trace(), 0.0, 1e-14);
    EXPECT_NEAR(q20.matrix.determinant(), -1.0, 1e-14);

    const auto q0 = parameter_form_Q(pencil, m, vec({1, 1}));
    EXPECT_EQ(q0.matrix.norm(), 0.0);
    EXPECT_EQ(q0.index + q0.coindex, 0);
    EXPECT_THROW(parameter_form_Q(pencil, m, vec({1})), ArgumentError);
}

TEST(ParameterFormQ, ScalingAndAntisymmetry) {
    const auto f = builtin::family("two_param_diag");
    const auto pencil = *extract_pencil(f);
    const Vector star = vec({1, 1});
    const auto m = build_reduced_model(f, star);
    std::mt19937_64 rng(30);
    std::uniform_real_distribution<double> d(-3, 3);
    for (int k = 0; k < 50; ++k) {
        const Vector mu = vec({d(rng), d(rng)});
        const double t = d(rng);
        const Matrix base = parameter_form_Q(pencil, m, mu).matrix;
        const Matrix scaled = parameter_form_Q(pencil, m, Vector(t * (mu - star) + star)).matrix;
        EXPECT_LE((scaled - t * base).cwiseAbs().maxCoeff(), 1e-12);
        const Matrix mirrored = parameter_form_Q(pencil, m, Vector(2 * star - mu)).matrix;
        EXPECT_LE((mirrored + base).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ParameterFormQ, NonCommutingFormIsNegatedReducedHessian) {
    // For F = ½uᵀ𝔅_λu the Schur complement equals −Σ(λ_j − λ*_j)Zᵀ B̂_j (Z + W dψ) exactly.
    Matrix base(2, 2), hat(2, 2);
    base << 2, 1, 1, 2;
    hat << 1, 0, 0, 0;
    const PencilFamily pencil(SymmetricOperator(base), {SymmetricOperator(hat)});
    const auto f = make_pencil_family(pencil);
    const double star = 1.5; // det(base − λ hat) = 2(2 − λ) − 1
    const auto m = build_reduced_model(f, star);
    for (double l : {1.2, 1.45, 1.6, 2.5}) {
        const auto q = parameter_form_Q(pencil, m, scalar_param(l));
        EXPECT_FALSE(q.commuting);
        EXPECT_NEAR(q.matrix(0, 0), -reduced_hessian_at_zero(m, l)(0, 0), 1e-12);
    }
}

TEST(ReductionProperties, ResidualBoundAndGradientConsistency) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> d(-1, 1);
    for (const auto& site : builtin_sites()) {
        const auto f = builtin::family(site.name);
        const auto m = build_reduced_model(f, site.lambda_star);
        const double rho = std::min(m.trust_radius, 0.2);
        for (int k = 0; k < 50; ++k) {
            Vector l = site.lambda_star;
            for (auto& x : l) x += 0.1 * d(rng);
            Vector z(m.kernel_dim());
            for (auto& x : z) x = rho * d(rng) / std::sqrt(static_cast<double>(z.size()));
            const auto s = solve_psi(m, l, z);
            const double tau = 1e-11 * (1 + f.gradient(l, Vector(m.kernel_basis * z)).norm());
            EXPECT_LE(s.residual, tau) << site.name;
            EXPECT_LE((m.complement_basis.transpose() * f.gradient(l, m.lift(z, s.w))).norm(), tau) << site.name;

            const Vector g = reduced_gradient(m, l, z);
            Vector fd(z.size());
            for (Eigen::Index i = 0; i < z.size(); ++i) {
                fd(i) = oracle::central_diff(
                    [&](double x) {
                        Vector zz = z;
                        zz(i) = x;
                        return reduced_value(m, l, zz);
                    },
                    z(i), 1e-5);
            }
            // relative error, floored where the gradient itself is tiny
            EXPECT_LE((fd - g).norm() / std::max(g.norm(), 1e-4), 1e-6) << site.name;
        }
    }
}

TEST(ReductionProperties, DegenerateHessianAtStar) {
    for (const auto& site : builtin_sites()) {
        const auto f = builtin::family(site.name);
        const auto m = build_reduced_model(f, site.lambda_star);
        const double scale = 1 + SymmetricOperator(f.hessian_at_zero(site.lambda_star)).norm();
        EXPECT_LE(reduced_hessian_at_zero(m, site.lambda_star).norm(), 1e-8 * scale) << site.name;
    }
}

TEST(ReductionProperties, CriticalPointsLiftToFullCriticalPoints) {
    for (const auto& [name, l] : std::vector<std::pair<std::string, double>>{
             {"pitchfork", 1.05}, {"transcritical", 0.97}, {"coupling", 0.997}, {"double_pitchfork", 1.04}}) {
        const auto f = builtin::family(name);
        const auto m = build_reduced_model(f, 1.0);
        const auto pts = find_reduced_critical_points(m, l, m.trust_radius);
        EXPECT_GE(pts.size(), 2u) << name << " radius " << m.trust_radius;
        for (const auto& z : pts) {
            ASSERT_LE(reduced_gradient(m, scalar_param(l), z).norm(), 1e-9);
            const auto s = solve_psi(m, l, z);
            const double tau = 1e-11 * (1 + f.gradient(scalar_param(l), Vector(m.kernel_basis * z)).norm());
            EXPECT_LE(f.gradient(scalar_param(l), m.lift(z, s.w)).norm(), 10 * tau) << name;
        }
    }
}
