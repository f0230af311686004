#include <gtest/gtest.h>

#include <random>

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

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

PotentialFamily random_pencil_family(std::mt19937_64& rng) {
    const Matrix a = oracle::random_symmetric(3, rng), b = oracle::random_symmetric(3, rng);
    return make_pencil_family(PencilFamily(SymmetricOperator(a), {SymmetricOperator(b)}), 0.5);
}

} // namespace

TEST(SymmetricOperator, RejectsNonSquareAndAsymmetric) {
    EXPECT_THROW(SymmetricOperator(Matrix::Zero(2, 3)), ArgumentError);
    EXPECT_THROW(SymmetricOperator(mat2(1, 2, 2.1, 1)), ArgumentError);
}

TEST(SymmetricOperator, SymmetrizesWithinTolerance) {
    const SymmetricOperator s(mat2(1, 2, 2 + 1e-14, 1));
    EXPECT_EQ(s(0, 1), s(1, 0));
    EXPECT_NEAR(s.norm(), 3.0, 1e-12);
}

TEST(EvalHessian, CouplingFamilyExamples) {
    const auto f = builtin::family("coupling");
    EXPECT_TRUE(eval_hessian(f, 0.0, Vector::Zero(2)).matrix().isApprox(mat2(1, 0, 0, 1)));
    EXPECT_TRUE(eval_hessian(f, 2.0, Vector::Zero(2)).matrix().isApprox(mat2(-1, 0, 0, 1)));
    EXPECT_TRUE(eval_hessian(f, 0.0, vec({1, 0})).matrix().isApprox(mat2(1, 2, 2, 1)));
}

TEST(EvalHessian, DimensionMismatchIsArgumentError) {
    const auto f = builtin::family("coupling");
    EXPECT_THROW(eval_hessian(f, 0.0, Vector::Zero(3)), ArgumentError);
    EXPECT_THROW(eval_hessian(f, vec({0, 1}), Vector::Zero(2)), ArgumentError);
}

TEST(EvalHessian, MatchesSymbolicCouplingHessian) {
    const auto f = builtin::family("coupling");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int s = 0; s < 50; ++s) {
        const double l = d(rng), u1 = d(rng), u2 = d(rng);
        const Matrix expected = mat2(1 - l + 2 * u2, 2 * u1, 2 * u1, 1);
        EXPECT_LT((eval_hessian(f, l, vec({u1, u2})).matrix() - expected).norm(), 1e-13);
    }
}

TEST(PolynomialFamily, PitchforkGradientAlongAxis) {
    const auto f = builtin::family("pitchfork");
    for (double l : {-0.5, 0.3, 1.7}) {
        for (double z : {-0.8, 0.1, 1.3}) {
            const Vector g = f.gradient(l, vec({z, 0}));
            EXPECT_NEAR(g(0), (1 - l) * z + z * z * z, 1e-14);
            EXPECT_EQ(g(1), 0.0);
        }
    }
}

TEST(PolynomialFamily, OneDimensionalQuadratic) {
    const auto f = make_polynomial_family({1, 1, {{{0}, {2}, 0.5}}});
    EXPECT_DOUBLE_EQ(f.gradient(3.0, vec({0.7}))(0), 0.7);
    EXPECT_DOUBLE_EQ(f.value(3.0, vec({2.0})), 2.0);
}

TEST(PolynomialFamily, RejectsLowDegreeAndMalformedTerms) {
    EXPECT_THROW(make_polynomial_family({1, 1, {{{0}, {1}, 1.0}}}), InvalidSpecError);
    EXPECT_THROW(make_polynomial_family({1, 1, {{{1}, {0}, 1.0}}}), InvalidSpecError);
    EXPECT_THROW(make_polynomial_family({1, 2, {{{0}, {2}, 1.0}}}), InvalidSpecError);
    EXPECT_THROW(make_polynomial_family({1, 1, {{{0, 0}, {2}, 1.0}}}), InvalidSpecError);
    EXPECT_THROW(make_polynomial_family({1, 1, {{{0}, {-1, 3}, 1.0}}}), InvalidSpecError);
    EXPECT_THROW(make_polynomial_family({1, 1, {}}), InvalidSpecError);
    EXPECT_THROW(make_polynomial_family({0, 1, {{{}, {2}, 1.0}}}), InvalidSpecError);
}

TEST(BvpFamily, ThreeNodeLaplacianPencil) {
    const auto f = make_bvp_family({3, {0, 0, 0.5}, {0, 0, 0.5}, 1.0});
    const double h = 0.25;
    for (double l : {0.0, 1.5, 20.0}) {
        Matrix expected(3, 3);
        expected << 2, -1, 0, -1, 2, -1, 0, -1, 2;
        expected /= h;
        expected -= l * h * Matrix::Identity(3, 3);
        EXPECT_LT((f.hessian_at_zero(scalar_param(l)) - expected).norm(), 1e-12);
    }
}

TEST(BvpFamily, GeneralizedEigenvaluesByDirectEigensolve) {
    // λ_k = (2 − 2cos(kπ/4))/h²: the roots of det(B − λ h I) = 0
    const auto f = make_bvp_family({3, {0, 0, 0.5}, {0, 0, 0.5}, 1.0});
    const double h = 0.25;
    const Matrix b0 = f.hessian_at_zero(scalar_param(0.0));
    const auto eig = oracle::jacobi_eigenvalues(b0);
    for (int k = 1; k <= 3; ++k) {
        EXPECT_NEAR(eig[static_cast<std::size_t>(k - 1)] / h, (2 - 2 * std::cos(k * M_PI / 4)) / (h * h), 1e-10);
    }
}

TEST(BvpFamily, RejectsInvalidDensities) {
    EXPECT_THROW(make_bvp_family({1, {0, 0, 0.5}, {0, 0, 0.5}, 1.0}), InvalidSpecError);
    EXPECT_THROW(make_bvp_family({3, {0, 1, 0.5}, {0, 0, 0.5}, 1.0}), InvalidSpecError);
    EXPECT_THROW(make_bvp_family({3, {0, 0, -0.5}, {0, 0, 0.5}, 1.0}), InvalidSpecError);
    EXPECT_THROW(make_bvp_family({3, {0, 0, 0.5}, {0, 1, 0.5}, 1.0}), InvalidSpecError);
    EXPECT_THROW(make_bvp_family({3, {0, 0}, {0, 0, 0.5}, 1.0}), InvalidSpecError);
    EXPECT_THROW(make_bvp_family({3, {0, 0, 0.5}, {0, 0, 0.5}, 0.0}), InvalidSpecError);
}

TEST(Consistency, QuadraticIsExactUpToRoundoff) {
    const auto f = make_polynomial_family({1, 2, {{{0}, {2, 0}, 0.5}, {{0}, {0, 2}, 0.5}}});
    const auto r = check_gradient_consistency(f, scalar_param(0.0), vec({0.3, -0.4}));
    EXPECT_LE(r.hessian_rel_error, 1e-10);
    EXPECT_LE(r.gradient_rel_error, 1e-9);
}

TEST(Consistency, BvpEightNodes) {
    const auto f = builtin::family("bvp_laplace");
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (int s = 0; s < 10; ++s) {
        Vector u(8);
        for (auto& x : u) x = d(rng);
        const auto r = check_gradient_consistency(f, scalar_param(10.0 * d(rng) + 10.0), u);
        EXPECT_LE(r.gradient_rel_error, 1e-6);
        EXPECT_LE(r.hessian_rel_error, 1e-6);
    }
}

class BuiltinFamilies : public ::testing::TestWithParam<std::string> {};

TEST_P(BuiltinFamilies, TrivialSolutionSymmetryAndFiniteDifferences) {
    const auto f = builtin::family(GetParam());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1, 1);
    for (int s = 0; s < 100; ++s) {
        Vector l(f.dim_param), u(f.dim_state);
        for (auto& x : l) x = 2 * d(rng);
        for (auto& x : u) x = d(rng);
        EXPECT_EQ(f.gradient(l, Vector::Zero(f.dim_state)).cwiseAbs().maxCoeff(), 0.0);
        const Matrix h = f.hessian_fn(l, u);
        EXPECT_LE(SymmetricOperator::symmetry_defect(h), 1e-12 * (1 + SymmetricOperator::max_abs(h)));
        if (s < 20) {
            const auto r = check_gradient_consistency(f, l, u);
            EXPECT_LE(r.gradient_rel_error, 1e-6);
            EXPECT_LE(r.hessian_rel_error, 1e-6);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(All, BuiltinFamilies, ::testing::ValuesIn(builtin::names()));

TEST(Builtins, UnknownNameIsArgumentError) { EXPECT_THROW(builtin::by_name("nope"), ArgumentError); }

TEST(ExtractPencil, AffineFamiliesRecoverOperators) {
    const auto p = extract_pencil(builtin::family("two_param_diag"));
    ASSERT_TRUE(p.has_value());
    EXPECT_TRUE(p->base.matrix().isApprox(Matrix::Identity(2, 2)));
    EXPECT_TRUE(p->hats[0].matrix().isApprox(mat2(1, 0, 0, 0)));
    EXPECT_TRUE(p->hats[1].matrix().isApprox(mat2(0, 0, 0, 1)));

    std::mt19937_64 rng(4);
    const auto f = random_pencil_family(rng);
    const auto q = extract_pencil(f);
    ASSERT_TRUE(q.has_value());
    for (double l : {-3.0, 0.4, 7.0}) EXPECT_LT((q->at(l) - f.hessian_at_zero(scalar_param(l))).norm(), 1e-10);
}

TEST(ExtractPencil, NonAffineHessianGivesNothing) {
    const auto f = make_polynomial_family({1, 1, {{{0}, {2}, 0.5}, {{2}, {2}, -0.5}}});
    EXPECT_FALSE(extract_pencil(f).has_value());
}

TEST(RestrictToLine, MapsParameterLine) {
    const auto f = builtin::family("two_param_diag");
    const auto line = restrict_to_line(f, vec({1, 1}), vec({2, 0}));
    // λ⃗(t) = (1 + t, 1 − t)
    const Matrix h = line.hessian_at_zero(scalar_param(0.5));
    EXPECT_TRUE(h.isApprox(mat2(-0.5, 0, 0, 0.5)));
    EXPECT_THROW(restrict_to_line(f, vec({1}), vec({2, 0})), ArgumentError);
}

TEST(Evenness, DetectsOddTerms) {
    EXPECT_TRUE(is_even_family(builtin::family("pitchfork"), scalar_param(1.0)));
    EXPECT_TRUE(is_even_family(builtin::family("double_pitchfork"), scalar_param(1.3)));
    EXPECT_FALSE(is_even_family(builtin::family("transcritical"), scalar_param(1.0)));
    EXPECT_FALSE(is_even_family(builtin::family("coupling"), scalar_param(1.0)));
}
