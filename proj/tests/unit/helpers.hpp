#pragma once

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <functional>
#include <vector>

#include <gmoi.hpp>

namespace testing_oracles {

using namespace gmoi;

template <class S>
S sc(long re, long im = 0) {
    return ScalarTraits<S>::from_parts(double(re), double(im));
}

template <class S>
Matrix<S> mat(int n, std::initializer_list<long> real_entries) {
    std::vector<S> e;
    for (long v : real_entries) e.push_back(ScalarTraits<S>::from_int(v));
    return Matrix<S>(n, e);
}

template <class S>
double tol_for(double float_tol) {
    return is_exact_v<S> ? 0.0 : float_tol;
}

template <class S>
double rel_residual(const Matrix<S>& a, const Matrix<S>& b) {
    return frobenius_norm(a - b) / std::max(1.0, frobenius_norm(b));
}

// n-th derivative at t = 0 of p(X + tY) for p = sum c_d z^d: n! times the sum
// of all words in X and Y of length d with exactly n letters Y.
template <class S>
Matrix<S> word_sum_oracle(const std::vector<S>& c, const Matrix<S>& x, const Matrix<S>& y, int n) {
    const int dim = x.dim();
    Matrix<S> out(dim);
    for (int d = n; d < int(c.size()); ++d) {
        if (ScalarTraits<S>::is_zero(c[d], 0.0)) continue;
        for (unsigned mask = 0; mask < (1u << d); ++mask) {
            if (__builtin_popcount(mask) != n) continue;
            Matrix<S> w = Matrix<S>::identity(dim);
            for (int k = 0; k < d; ++k) w = w * (((mask >> k) & 1u) ? y : x);
            out += c[d] * w;
        }
    }
    return out * factorial<S>(n);
}

// Recursive divided difference from function values only (distinct nodes).
template <class S>
S naive_dd(const std::function<S(const S&)>& f, const std::vector<S>& z) {
    if (z.size() == 1) return f(z[0]);
    std::vector<S> head(z.begin(), z.end() - 1), tail(z.begin() + 1, z.end());
    return (naive_dd(f, head) - naive_dd(f, tail)) / (z.front() - z.back());
}

// Classical MOI for diagonal parameters by direct index summation:
// T_{a0 a_zeta} = sum over a_1..a_{zeta-1} of beta(d0[a0], .., d_zeta[a_zeta]) Y1[a0 a1] .. Yzeta[a_{zeta-1} a_zeta].
inline MatrixF diagonal_moi(const MultiFunction<Complex>& beta, const std::vector<std::vector<Complex>>& diags,
                            const std::vector<MatrixF>& ys) {
    const int n = int(diags[0].size());
    const int zeta = int(ys.size());
    MatrixF out(n);
    std::vector<int> idx(zeta + 1, 0);
    std::function<void(int)> rec = [&](int level) {
        if (level > zeta) {
            std::vector<Complex> lam;
            Complex w = 1;
            for (int p = 0; p <= zeta; ++p) lam.push_back(diags[p][idx[p]]);
            for (int p = 0; p < zeta; ++p) w *= ys[p](idx[p], idx[p + 1]);
            out(idx[0], idx[zeta]) += beta.eval(std::span<const Complex>(lam)) * w;
            return;
        }
        for (int a = 0; a < n; ++a) {
            idx[level] = a;
            rec(level + 1);
        }
    };
    rec(0);
    return out;
}

inline MatrixF diag_matrix(const std::vector<Complex>& d) {
    MatrixF m(int(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(int(i), int(i)) = d[i];
    return m;
}

inline MatrixF eigen_expm(const MatrixF& a) {
    Eigen::MatrixXcd e = to_eigen(a).exp();
    return from_eigen(e);
}

template <class S>
JordanDecomposition<S> prescribed(const Matrix<S>& v, std::vector<BlockSpec<S>> blocks) {
    return from_jordan_form(v, std::move(blocks), 1e-12);
}

} // namespace testing_oracles
