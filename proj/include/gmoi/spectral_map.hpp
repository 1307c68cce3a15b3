#pragma once

#include <vector>

#include "functions.hpp"
#include "jordan.hpp"

namespace gmoi {

// All kappa-subsets of {1..r} in lexicographic order (1-based indices).
inline std::vector<std::vector<int>> enumerate_selections(int r, int kappa) {
    if (r < 1 || kappa < 1 || kappa > r) throw ValidationError("selection size out of range");
    std::vector<std::vector<int>> out;
    std::vector<int> cur(kappa);
    for (int i = 0; i < kappa; ++i) cur[i] = i + 1;
    while (true) {
        out.push_back(cur);
        int i = kappa - 1;
        while (i >= 0 && cur[i] == r - kappa + i + 1) --i;
        if (i < 0) break;
        ++cur[i];
        for (int j = i + 1; j < kappa; ++j) cur[j] = cur[j - 1] + 1;
    }
    return out;
}

namespace detail {

// Advance an odometer with per-digit bounds; returns false after the last state.
inline bool advance(std::vector<int>& digits, const std::vector<int>& bounds, const std::vector<int>& lows) {
    for (int j = int(digits.size()) - 1; j >= 0; --j) {
        if (++digits[j] < bounds[j]) return true;
        digits[j] = lows[j];
    }
    return false;
}

} // namespace detail

// f(X_1, ..., X_r): projector term, mixed terms over index selections with
// 1 <= kappa < r, and the all-nilpotent term (kappa = r). Loop order: eigenvalue tuples,
// geometric indices, kappa, selections, exponent vectors.
template <class S>
Matrix<S> eval_multivariate(const MultiFunction<S>& f, const std::vector<JordanDecomposition<S>>& js) {
    using T = ScalarTraits<S>;
    const int r = int(js.size());
    if (r == 0) throw ValidationError("no decompositions given");
    if (f.arity() != r) throw DimensionMismatch("function arity does not match the number of matrices");
    const int n = js[0].dim;
    for (const auto& j : js)
        if (j.dim != n) throw DimensionMismatch("decomposition dimensions differ");

    // blocks_of[p][k] = indices of blocks of matrix p with eigenvalue k.
    std::vector<std::vector<std::vector<int>>> blocks_of(r);
    for (int p = 0; p < r; ++p) {
        blocks_of[p].resize(js[p].eigenvalues.size());
        for (std::size_t b = 0; b < js[p].blocks.size(); ++b) blocks_of[p][js[p].blocks[b].eigenIndex].push_back(int(b));
    }

    Matrix<S> out(n);
    auto add_term = [&](const std::vector<const SpectralBlock<S>*>& bl, const std::vector<int>& q) {
        std::vector<S> lam(r);
        S denom = T::one();
        for (int p = 0; p < r; ++p) {
            lam[p] = bl[p]->eigenvalue;
            denom *= factorial<S>(q[p]);
        }
        const S c = f.partial(std::span<const int>(q), std::span<const S>(lam)) / denom;
        if (T::is_zero(c, 0.0)) return;
        Matrix<S> prod = bl[0]->factor(q[0]);
        for (int p = 1; p < r; ++p) prod = prod * bl[p]->factor(q[p]);
        out += c * prod;
    };

    std::vector<int> k(r, 0), kb(r), zeros(r, 0);
    for (int p = 0; p < r; ++p) kb[p] = js[p].distinct_count();
    do {
        std::vector<int> g(r, 0), gb(r);
        for (int p = 0; p < r; ++p) gb[p] = int(blocks_of[p][k[p]].size());
        do {
            std::vector<const SpectralBlock<S>*> bl(r);
            for (int p = 0; p < r; ++p) bl[p] = &js[p].blocks[blocks_of[p][k[p]][g[p]]];
            add_term(bl, zeros);
            for (int kappa = 1; kappa <= r; ++kappa) {
                for (const auto& sel : enumerate_selections(r, kappa)) {
                    std::vector<int> q(r, 0), qb(r, 1), ql(r, 0);
                    bool empty = false;
                    for (int idx : sel) {
                        const int p = idx - 1;
                        if (bl[p]->order < 2) empty = true;
                        q[p] = ql[p] = 1;
                        qb[p] = bl[p]->order;
                    }
                    if (empty) continue;
                    do add_term(bl, q);
                    while (detail::advance(q, qb, ql));
                }
            }
        } while (detail::advance(g, gb, zeros));
    } while (detail::advance(k, kb, zeros));
    return out;
}

template <class S>
Matrix<S> eval_univariate(const MultiFunction<S>& f, const JordanDecomposition<S>& j) {
    if (f.arity() != 1) throw DimensionMismatch("univariate evaluation needs an arity-1 function");
    return eval_multivariate(f, std::vector<JordanDecomposition<S>>{j});
}

// The classical MOI rewritten as f(X_1, Y_1, X_2, ..., Y_zeta, X_{zeta+1})
// with f = beta(odd variables) * product of even variables.
template <class S>
Matrix<S> moi_as_spectral_map(const FunctionPtr<S>& beta, const std::vector<JordanDecomposition<S>>& params,
                              const std::vector<Matrix<S>>& args, double tol) {
    const int zeta = int(args.size());
    if (int(params.size()) != zeta + 1) throw DimensionMismatch("need zeta + 1 parameter decompositions");
    ProductMoiFunction<S> f(beta, zeta);
    std::vector<JordanDecomposition<S>> js;
    for (int p = 0; p <= zeta; ++p) {
        js.push_back(params[p]);
        if (p < zeta) js.push_back(decompose_auto(args[p], tol));
    }
    return eval_multivariate(f, js);
}

} // namespace gmoi
