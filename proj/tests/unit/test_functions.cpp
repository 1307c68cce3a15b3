#include "helpers.hpp"

using namespace gmoi;
using namespace testing_oracles;

TEST(Functions, BuiltinExamples) {
    auto sq = make_power<Complex>(2);
    EXPECT_EQ(sq->eval({Complex(3)}), Complex(9));
    EXPECT_NEAR(std::abs(make_exp<Complex>()->partial({5}, {Complex(0)}) - 1.0), 0.0, 1e-15);
    EXPECT_EQ(make_power<QComplex>(3)->partial({2}, {sc<QComplex>(2)}), sc<QComplex>(12));
    EXPECT_EQ(make_power<QComplex>(3)->partial({4}, {sc<QComplex>(2)}), sc<QComplex>(0));
}

TEST(Functions, RationalPoleAndOrderErrors) {
    auto r = make_rational<Complex>({Complex(1)}, {Complex(-1), Complex(1)});  // 1 / (z - 1)
    EXPECT_NEAR(std::abs(r->eval({Complex(3)}) - 0.5), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(r->partial({1}, {Complex(3)}) + 0.25), 0.0, 1e-15);
    EXPECT_THROW(r->eval({Complex(1)}), PoleError);
    EXPECT_THROW(make_rational<Complex>({Complex(1)}, {Complex(0)}), ValidationError);
    auto capped = std::make_shared<Polynomial<Complex>>(std::vector<Complex>{1, 2, 3}, 1);
    EXPECT_THROW(capped->partial({2}, {Complex(0)}), UnsupportedOrder);
}

TEST(Functions, DividedDifferenceExamples) {
    auto sq = make_power<QComplex>(2);
    EXPECT_EQ(divided_difference(*sq, std::vector<QComplex>{sc<QComplex>(1), sc<QComplex>(2)}), sc<QComplex>(3));
    EXPECT_EQ(divided_difference(*sq, std::vector<QComplex>{sc<QComplex>(2), sc<QComplex>(2)}), sc<QComplex>(4));
    EXPECT_EQ(divided_difference(*sq, std::vector<QComplex>{sc<QComplex>(0), sc<QComplex>(1), sc<QComplex>(5)}),
              sc<QComplex>(1));
    auto fsq = make_power<Complex>(2);
    EXPECT_NEAR(std::abs(divided_difference(*fsq, std::vector<Complex>{1.0, 2.0}) - 3.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(divided_difference(*fsq, std::vector<Complex>{2.0, 2.0 + 1e-12}) - 4.0), 0.0, 1e-9);
}

TEST(Functions, PolynomialDividedDifferenceLeadingCoefficient) {
    Rng rng(21);
    for (int d = 0; d <= 6; ++d) {
        std::vector<QComplex> c;
        for (int k = 0; k <= d; ++k) c.push_back(QComplex(mpq_class(rng.integer(-9, 9), rng.integer(1, 5))));
        if (c[d] == QComplex()) c[d] = sc<QComplex>(1);
        auto p = make_polynomial<QComplex>(c);
        const auto z = sc<QComplex>(rng.integer(-3, 3), rng.integer(-3, 3));
        EXPECT_EQ(divided_difference(*p, std::vector<QComplex>(d + 1, z)), c[d]) << "degree " << d;
        EXPECT_EQ(divided_difference(*p, std::vector<QComplex>(d + 2, z)), QComplex()) << "degree " << d;
        std::vector<QComplex> distinct;
        for (int k = 0; k <= d; ++k) distinct.push_back(sc<QComplex>(k, 1 - k));
        EXPECT_EQ(divided_difference(*p, distinct), c[d]);
    }
}

TEST(Functions, DividedDifferenceMatchesNaiveRecursion) {
    Rng rng(5);
    auto e = make_exp<Complex>();
    const std::function<Complex(const Complex&)> ev = [&](const Complex& z) { return e->eval({z}); };
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Complex> z;
        for (int k = 0; k < 1 + trial % 4; ++k) z.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
        EXPECT_LE(std::abs(divided_difference(*e, z) - naive_dd(ev, z)), 1e-9);
    }
}

TEST(Functions, DividedDifferenceIsSymmetric) {
    Rng rng(9);
    auto lifted = lift_divided_difference<Complex>(make_power<Complex>(3), 1);
    for (int trial = 0; trial < 50; ++trial) {
        const Complex a(rng.uniform(-1, 1), rng.uniform(-1, 1)), b(rng.uniform(-1, 1), rng.uniform(-1, 1));
        EXPECT_LE(std::abs(lifted->eval({a, b}) - lifted->eval({b, a})), 1e-13);
    }
}

TEST(Functions, LiftExamples) {
    auto l1 = lift_divided_difference<QComplex>(make_power<QComplex>(2), 1);
    EXPECT_EQ(l1->eval({sc<QComplex>(1), sc<QComplex>(2)}), sc<QComplex>(3));
    auto l3 = lift_divided_difference<QComplex>(make_power<QComplex>(3), 1);
    EXPECT_EQ(l3->partial({1, 0}, {sc<QComplex>(2), sc<QComplex>(2)}), sc<QComplex>(6));
    auto lf = lift_divided_difference<Complex>(make_power<Complex>(3), 1);
    EXPECT_LE(fd_check(*lf, {1, 0}, {Complex(2.0), Complex(2.0)}, 1e-4), 1e-5);
    UnivariatePtr<Complex> capped = std::make_shared<Polynomial<Complex>>(std::vector<Complex>{1, 2, 3}, 1);
    EXPECT_THROW(lift_divided_difference<Complex>(capped, 2)->eval({0.0, 0.0, 0.0}), UnsupportedOrder);
}

// The divided-difference identity: D f^{[k]}(.., a, ..) - D f^{[k]}(.., b, ..) = (a - b) D f^{[k+1]}(.., a, b, ..)
// with D a partial derivative in variables other than the replaced one.
template <class S>
double dd_identity_residual(const UnivariatePtr<S>& f, std::vector<S> nodes, int slot, const S& a, const S& b,
                            std::vector<int> q) {
    const int k = int(nodes.size()) - 1;
    auto fk = lift_divided_difference<S>(f, k);
    auto fk1 = lift_divided_difference<S>(f, k + 1);
    auto left = nodes, right = nodes;
    left[slot] = a;
    right[slot] = b;
    q[slot] = 0;
    std::vector<S> wide = nodes;
    wide[slot] = a;
    wide.insert(wide.begin() + slot + 1, b);
    std::vector<int> qw = q;
    qw.insert(qw.begin() + slot + 1, 0);
    const S lhs = fk->partial(std::span<const int>(q), std::span<const S>(left)) -
                  fk->partial(std::span<const int>(q), std::span<const S>(right));
    const S rhs = (a - b) * fk1->partial(std::span<const int>(qw), std::span<const S>(wide));
    return ScalarTraits<S>::abs(lhs - rhs);
}

TEST(Functions, DividedDifferenceIdentityRandomNodes) {
    Rng rng(100);
    auto p = make_polynomial<Complex>({1.0, -2.0, 0.5, 3.0, 0.0, -1.0, 0.25});
    auto e = make_exp<Complex>();
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + trial % 3;
        std::vector<Complex> nodes;
        std::vector<int> q;
        for (int i = 0; i <= k; ++i) {
            nodes.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
            q.push_back(rng.integer(0, 1));
        }
        const int slot = rng.integer(0, k);
        const Complex a(rng.uniform(-1, 1), rng.uniform(-1, 1)), b(rng.uniform(-1, 1), rng.uniform(-1, 1));
        EXPECT_LE(dd_identity_residual<Complex>(trial % 2 ? p : e, nodes, slot, a, b, q), 1e-9) << "trial " << trial;
    }
}

TEST(Functions, DividedDifferenceIdentityExact) {
    Rng rng(101);
    auto p = make_polynomial<QComplex>({sc<QComplex>(1), sc<QComplex>(-2), sc<QComplex>(0, 1), sc<QComplex>(3),
                                        sc<QComplex>(0), sc<QComplex>(-1)});
    for (int trial = 0; trial < 40; ++trial) {
        const int k = 1 + trial % 3;
        std::vector<QComplex> nodes;
        std::vector<int> q;
        for (int i = 0; i <= k; ++i) {
            nodes.push_back(sc<QComplex>(rng.integer(-2, 2), rng.integer(-2, 2)));
            q.push_back(rng.integer(0, 1));
        }
        const int slot = rng.integer(0, k);
        EXPECT_EQ(dd_identity_residual<QComplex>(p, nodes, slot, sc<QComplex>(rng.integer(-3, 3)),
                                                 sc<QComplex>(rng.integer(-3, 3), 1), q),
                  0.0);
    }
}

TEST(Functions, FdCheckExamples) {
    EXPECT_LE(fd_check(*make_exp<Complex>(), {1}, {Complex(0)}, 1e-5), 1e-9);
    EXPECT_LE(fd_check(*make_power<Complex>(2), {3}, {Complex(0.3)}, 1e-2), 1e-8);
}

TEST(Functions, LiftedPartialsMatchFiniteDifferences) {
    Rng rng(55);
    auto f = lift_divided_difference<Complex>(make_exp<Complex>(), 2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Complex> z;
        std::vector<int> q;
        // Well-separated nodes keep the divided-difference evaluation itself accurate.
        while (z.size() < 3) {
            const Complex c{rng.uniform(-1, 1), rng.uniform(-1, 1)};
            if (std::all_of(z.begin(), z.end(), [&](const Complex& w) { return std::abs(w - c) > 0.3; })) z.push_back(c);
        }
        // One-variable partials at a fine step; mixed partials at a coarser step,
        // since round-off in an order-k stencil grows like eps / h^k.
        std::vector<int> single(3, 0);
        single[rng.integer(0, 2)] = rng.integer(1, 2);
        const Complex ref1 = f->partial(std::span<const int>(single), std::span<const Complex>(z));
        EXPECT_LE(fd_check(*f, single, z, 1e-4), 1e-5 * std::max(1.0, std::abs(ref1)));
        for (int i = 0; i < 3; ++i) q.push_back(rng.integer(0, 1));
        const Complex ref = f->partial(std::span<const int>(q), std::span<const Complex>(z));
        EXPECT_LE(fd_check(*f, q, z, 1e-2), 1e-5 * std::max(1.0, std::abs(ref)));
    }
}

TEST(Functions, FornbergWeightsReproduceMonomials) {
    const std::vector<QComplex> x{sc<QComplex>(-2), sc<QComplex>(-1), sc<QComplex>(0), sc<QComplex>(1), sc<QComplex>(2)};
    for (int deriv = 0; deriv <= 4; ++deriv) {
        const auto w = fd_weights(x, deriv);
        for (int p = 0; p <= 4; ++p) {
            QComplex acc;
            for (std::size_t i = 0; i < x.size(); ++i) {
                QComplex xp = sc<QComplex>(1);
                for (int e = 0; e < p; ++e) xp *= x[i];
                acc += w[i] * xp;
            }
            EXPECT_EQ(acc, p == deriv ? factorial<QComplex>(p) : QComplex());
        }
    }
}

TEST(Functions, MonomialAndSeparableProducts) {
    auto prod = std::make_shared<MonomialSum<QComplex>>(
        2, std::vector<MonomialSum<QComplex>::Term>{{sc<QComplex>(3), {2, 1}}});  // 3 a^2 b
    EXPECT_EQ(prod->partial({1, 1}, {sc<QComplex>(2), sc<QComplex>(5)}), sc<QComplex>(12));
    SeparableProduct<QComplex> sp(3, {{make_power<QComplex>(2), {0}}, {prod, {1, 2}}});
    EXPECT_EQ(sp.partial({1, 0, 1}, {sc<QComplex>(1), sc<QComplex>(2), sc<QComplex>(3)}), sc<QComplex>(2 * 12));
    ProductMoiFunction<QComplex> moi(lift_divided_difference<QComplex>(make_power<QComplex>(2), 1), 1);
    EXPECT_EQ(moi.eval({sc<QComplex>(1), sc<QComplex>(7), sc<QComplex>(2)}), sc<QComplex>(21));
    EXPECT_EQ(moi.partial({0, 1, 0}, {sc<QComplex>(1), sc<QComplex>(7), sc<QComplex>(2)}), sc<QComplex>(3));
    EXPECT_EQ(moi.partial({0, 2, 0}, {sc<QComplex>(1), sc<QComplex>(7), sc<QComplex>(2)}), QComplex());
}

TEST(Functions, ExponentialJetMatchesTaylor) {
    auto e = make_exp<Complex>();
    const Complex z(0.3, -0.7);
    const auto j = e->jet(z, 6);
    double fact = 1;
    for (int k = 0; k <= 6; ++k) {
        if (k) fact *= k;
        EXPECT_LE(std::abs(j[k] - std::exp(z) / fact), 1e-14);
    }
}

TEST(Functions, MatrixExponentialMatchesEigen) {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = random_matrix<Complex>(4, rng) * Complex(2.0);
        EXPECT_LE(rel_residual(make_exp<Complex>()->apply(a), eigen_expm(a)), 1e-12);
    }
}
