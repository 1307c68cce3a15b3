#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "jordan.hpp"

namespace gmoi {

// Seeded generator with a fixed uniform mapping so fixtures are reproducible
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}

    double uniform() { return double(g_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    int integer(int lo, int hi) { return lo + int(g_() % std::uint64_t(hi - lo + 1)); }
    std::uint64_t raw() { return g_(); }

private:
    std::mt19937_64 g_;
};

inline constexpr double kMaxFixtureCondition = 1e6;
inline constexpr int kMaxRedraws = 1000;

template <class S>
S random_scalar(Rng& rng, bool complex_values = true) {
    using T = ScalarTraits<S>;
    if constexpr (is_exact_v<S>) {
        const int re = rng.integer(-3, 3);
        const int im = complex_values ? rng.integer(-3, 3) : 0;
        return QComplex(mpq_class(re), mpq_class(im));
    } else {
        const double re = rng.uniform(-1, 1);
        const double im = complex_values ? rng.uniform(-1, 1) : 0.0;
        return T::from_parts(re, im);
    }
}

// Entries uniform in [-1, 1] (float) or integers in [-3, 3] (exact).
template <class S>
Matrix<S> random_matrix(int n, Rng& rng, bool complex_values = true) {
    Matrix<S> m(n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m(r, c) = random_scalar<S>(rng, complex_values);
    return m;
}

// Similarity with condition estimate at most 1e6; ill-conditioned draws are re-drawn.
template <class S>
Matrix<S> random_similarity(int n, Rng& rng, bool complex_values = true) {
    for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
        Matrix<S> v = random_matrix<S>(n, rng, complex_values);
        if constexpr (is_exact_v<S>) {
            if (rank_of(v, 0.0) < n) continue;
        }
        double cond = 0;
        try {
            cond = condition_estimate(v);
        } catch (const SingularMatrix&) {
            continue;
        }
        if (cond <= kMaxFixtureCondition) return v;
    }
    throw ValidationError("could not draw a well-conditioned similarity");
}

// Haar-like unitary from the QR factorization of a random complex matrix.
inline MatrixF random_unitary(int n, Rng& rng) {
    Eigen::MatrixXcd a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    Eigen::MatrixXcd q = qr.householderQ();
    return from_eigen(q);
}

enum class FixtureKind { Similar, Unitary };

template <class S>
struct Fixture {
    std::vector<BlockSpec<S>> blocks;
    Matrix<S> transform;
    Matrix<S> matrix;
    JordanDecomposition<S> decomposition;
};

// X = V J V^{-1} together with its ground-truth decomposition.
template <class S>
Fixture<S> make_fixture(const std::vector<BlockSpec<S>>& blocks, Rng& rng, FixtureKind kind = FixtureKind::Similar,
                        double tol = 1e-10) {
    int n = 0;
    for (const auto& b : blocks) {
        if (b.size < 1) throw ValidationError("block size must be positive");
        n += b.size;
    }
    if (n < 1) throw ValidationError("fixture needs at least one block");
    Fixture<S> fx;
    fx.blocks = blocks;
    std::optional<Matrix<S>> vinv;
    if (kind == FixtureKind::Unitary) {
        if constexpr (is_exact_v<S>) {
            throw ValidationError("unitary fixtures are float-only");
        } else {
            fx.transform = random_unitary(n, rng);
            vinv = fx.transform.adjoint();
        }
    } else {
        fx.transform = random_similarity<S>(n, rng);
    }
    if (!vinv) vinv = inverse(fx.transform);
    fx.matrix = fx.transform * jordan_matrix(blocks) * *vinv;
    fx.decomposition = from_jordan_form(fx.transform, blocks, tol, vinv);
    fx.decomposition.source = fx.matrix;
    return fx;
}

// Random Jordan structure of total size n, blocks no larger than max_block,
// eigenvalues drawn from a pool of `distinct` small values.
template <class S>
std::vector<BlockSpec<S>> random_structure(int n, int max_block, int distinct, Rng& rng, bool complex_values = false) {
    std::vector<S> pool;
    while (int(pool.size()) < distinct) {
        S z = random_scalar<S>(rng, complex_values);
        bool dup = false;
        for (const auto& p : pool) dup = dup || ScalarTraits<S>::near(p, z, 1e-3);
        if (!dup) pool.push_back(z);
    }
    std::vector<BlockSpec<S>> out;
    int left = n;
    while (left > 0) {
        const int size = rng.integer(1, std::min(left, max_block));
        out.push_back({pool[rng.integer(0, distinct - 1)], size});
        left -= size;
    }
    return out;
}

// Distinct eigenvalues, one 1x1 block each.
template <class S>
std::vector<BlockSpec<S>> random_diagonal_structure(int n, Rng& rng, bool complex_values = false) {
    return random_structure<S>(n, 1, n, rng, complex_values);
}

template <class S>
Matrix<S> random_hermitian(int n, Rng& rng) {
    Matrix<S> a = random_matrix<S>(n, rng);
    return a + a.adjoint();
}

} // namespace gmoi
