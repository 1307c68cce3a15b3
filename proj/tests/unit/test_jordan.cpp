#include "helpers.hpp"

using namespace gmoi;
using namespace testing_oracles;

template <class S>
class JordanTyped : public ::testing::Test {};
using ScalarModes = ::testing::Types<Complex, QComplex>;
TYPED_TEST_SUITE(JordanTyped, ScalarModes);

TYPED_TEST(JordanTyped, IdentityHasOneProjector) {
    using S = TypeParam;
    const auto d = decompose_auto(Matrix<S>::identity(2), 1e-10);
    ASSERT_EQ(d.distinct_count(), 1);
    EXPECT_TRUE(ScalarTraits<S>::near(d.eigenvalues[0], ScalarTraits<S>::one(), 1e-12));
    Matrix<S> sum(2);
    for (const auto& b : d.blocks) {
        sum += b.projector;
        EXPECT_TRUE(is_zero_matrix(b.nilpotent, 0.0));
    }
    EXPECT_LE(frobenius_norm(sum - Matrix<S>::identity(2)), tol_for<S>(1e-12));
    EXPECT_LE(frobenius_norm(reconstruct(d) - Matrix<S>::identity(2)), tol_for<S>(1e-12));
}

TYPED_TEST(JordanTyped, CanonicalJordanBlock) {
    using S = TypeParam;
    const auto x = mat<S>(2, {2, 1, 0, 2});
    const auto d = decompose_auto(x, 1e-10);
    ASSERT_EQ(d.blocks.size(), 1u);
    const auto& b = d.blocks[0];
    EXPECT_TRUE(ScalarTraits<S>::near(b.eigenvalue, ScalarTraits<S>::from_int(2), 1e-9));
    EXPECT_EQ(b.order, 2);
    EXPECT_LE(frobenius_norm(b.projector - Matrix<S>::identity(2)), tol_for<S>(1e-9));
    EXPECT_LE(frobenius_norm(b.nilpotent - mat<S>(2, {0, 1, 0, 0})), tol_for<S>(1e-9));
    EXPECT_LE(frobenius_norm(reconstruct(d) - x), tol_for<S>(1e-9));
    const auto [xp, xn] = split_parts(d);
    EXPECT_LE(frobenius_norm(xp - mat<S>(2, {2, 0, 0, 2})), tol_for<S>(1e-9));
    EXPECT_LE(frobenius_norm(xn - mat<S>(2, {0, 1, 0, 0})), tol_for<S>(1e-9));
}

TYPED_TEST(JordanTyped, DiagonalDistinct) {
    using S = TypeParam;
    const auto d = decompose_auto(mat<S>(2, {1, 0, 0, 2}), 1e-10);
    ASSERT_EQ(d.distinct_count(), 2);
    EXPECT_LE(frobenius_norm(d.blocks[0].projector - mat<S>(2, {1, 0, 0, 0})), tol_for<S>(1e-12));
    EXPECT_LE(frobenius_norm(d.blocks[1].projector - mat<S>(2, {0, 0, 0, 1})), tol_for<S>(1e-12));
    EXPECT_TRUE(d.diagonalizable());
}

TYPED_TEST(JordanTyped, NilpotentInput) {
    using S = TypeParam;
    const auto x = mat<S>(2, {0, 1, 0, 0});
    const auto d = decompose_auto(x, 1e-10);
    ASSERT_EQ(d.blocks.size(), 1u);
    EXPECT_EQ(d.blocks[0].order, 2);
    EXPECT_LE(frobenius_norm(d.blocks[0].nilpotent - x), tol_for<S>(1e-9));
}

TYPED_TEST(JordanTyped, PrescribedFixturesSatisfyInvariants) {
    using S = TypeParam;
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 5;
        const auto fx = make_fixture(random_structure<S>(n, 3, 1 + trial % 3, rng), rng);
        const auto rep = validate(fx.decomposition);
        EXPECT_LE(rep.max_residual(), tol_for<S>(1e-9)) << "trial " << trial;
        EXPECT_TRUE(rep.ordersMinimal);
        EXPECT_LE(rel_residual(reconstruct(fx.decomposition), fx.matrix), tol_for<S>(1e-10));
        const auto [xp, xn] = split_parts(fx.decomposition);
        EXPECT_LE(frobenius_norm(commutator(xp, xn)), tol_for<S>(1e-9));
        int alg = 0;
        for (int a : fx.decomposition.algMultiplicities) alg += a;
        EXPECT_EQ(alg, n);
        for (const auto& b : fx.decomposition.blocks) {
            EXPECT_LE(frobenius_norm(mat_pow(b.nilpotent, b.order)), tol_for<S>(1e-9));
            EXPECT_LE(frobenius_norm(b.projector * b.nilpotent - b.nilpotent), tol_for<S>(1e-9));
            EXPECT_LE(frobenius_norm(b.nilpotent * b.projector - b.nilpotent), tol_for<S>(1e-9));
        }
    }
}

TYPED_TEST(JordanTyped, AutoMatchesPrescribedStructure) {
    using S = TypeParam;
    Rng rng(77);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 2 + trial % 4;
        const auto fx = make_fixture(random_structure<S>(n, 3, 2, rng), rng);
        const auto d = decompose_auto(fx.matrix, is_exact_v<S> ? 1e-10 : 1e-8);
        EXPECT_EQ(structure_signature(d), structure_signature(fx.decomposition)) << "trial " << trial;
        EXPECT_LE(validate(d).max_residual(), tol_for<S>(1e-6));
    }
}

TYPED_TEST(JordanTyped, PrescribedModeRebuildsFromTransform) {
    using S = TypeParam;
    Rng rng(8);
    const auto fx = make_fixture(random_structure<S>(4, 2, 2, rng), rng);
    std::vector<int> sizes;
    for (const auto& b : fx.blocks) sizes.push_back(b.size);
    const auto d = decompose_prescribed(fx.matrix, fx.transform, sizes, 1e-9);
    EXPECT_LE(validate(d).max_residual(), tol_for<S>(1e-9));
    EXPECT_EQ(structure_signature(d), structure_signature(fx.decomposition));
}

TEST(Jordan, CanonicalBlockOrdering) {
    // Eigenvalues sorted lexicographically by (re, im), then blocks by decreasing size.
    using S = QComplex;
    const auto v = Matrix<S>::identity(6);
    const auto d = from_jordan_form(v, {{sc<S>(3), 1}, {sc<S>(1), 1}, {sc<S>(1), 2}, {sc<S>(1, -1), 2}}, 0.0);
    ASSERT_EQ(d.blocks.size(), 4u);
    EXPECT_EQ(d.blocks[0].eigenvalue, sc<S>(1, -1));
    EXPECT_EQ(d.blocks[1].eigenvalue, sc<S>(1));
    EXPECT_EQ(d.blocks[1].order, 2);
    EXPECT_EQ(d.blocks[2].order, 1);
    EXPECT_EQ(d.blocks[2].blockIndex, 1);
    EXPECT_EQ(d.blocks[3].eigenvalue, sc<S>(3));
    EXPECT_EQ(d.geomMultiplicities, (std::vector<int>{1, 2, 1}));
    EXPECT_EQ(d.algMultiplicities, (std::vector<int>{2, 3, 1}));
}

TEST(Jordan, ValidateDetectsZeroedProjector) {
    using S = QComplex;
    Rng rng(4);
    auto fx = make_fixture(random_diagonal_structure<S>(3, rng), rng);
    auto d = fx.decomposition;
    const double missing = frobenius_norm(d.blocks[1].projector);
    d.blocks[1].projector = Matrix<S>(3);
    EXPECT_DOUBLE_EQ(validate(d).completeness, missing);
}

TEST(Jordan, HermitianSplitHasZeroNilpotent) {
    Rng rng(6);
    const auto h = random_hermitian<Complex>(4, rng);
    const auto [xp, xn] = split_parts(decompose_auto(h, 1e-10));
    EXPECT_LE(frobenius_norm(xp - h), 1e-10);
    EXPECT_LE(frobenius_norm(xn), 1e-10);
}

TEST(Jordan, AmbiguousClusteringIsReported) {
    MatrixF x(2);
    x(0, 0) = 1.0;
    x(1, 1) = 1.0 + 5e-5;
    EXPECT_THROW(decompose_auto(x, 1e-10), AmbiguousClustering);
}

TEST(Jordan, PrescribedRejectsWrongSizes) {
    EXPECT_THROW(decompose_prescribed(MatrixQ::identity(3), MatrixQ::identity(3), {2, 2}, 0.0), ValidationError);
}
