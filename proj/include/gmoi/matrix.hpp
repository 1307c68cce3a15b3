#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "scalar.hpp"

namespace gmoi {

// Dense square matrix, row-major.
template <class S>
class Matrix {
public:
    using Traits = ScalarTraits<S>;

    Matrix() = default;
    explicit Matrix(int n) : n_(n), a_(std::size_t(n) * n, Traits::zero()) {
        if (n < 0) throw ValidationError("negative matrix dimension");
    }
    Matrix(int n, std::vector<S> entries) : n_(n), a_(std::move(entries)) {
        if (a_.size() != std::size_t(n) * n) throw DimensionMismatch("entry count does not match n*n");
    }

    static Matrix identity(int n) {
        Matrix m(n);
        for (int i = 0; i < n; ++i) m(i, i) = Traits::one();
        return m;
    }

    int dim() const { return n_; }
    S& operator()(int i, int j) { return a_[std::size_t(i) * n_ + j]; }
    const S& operator()(int i, int j) const { return a_[std::size_t(i) * n_ + j]; }
    const std::vector<S>& entries() const { return a_; }

    Matrix adjoint() const {
        Matrix r(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) r(j, i) = Traits::conj((*this)(i, j));
        return r;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
        return *this;
    }
    Matrix& operator*=(const S& s) {
        for (auto& v : a_) v *= s;
        return *this;
    }
    Matrix operator-() const {
        Matrix r(*this);
        for (auto& v : r.a_) v = -v;
        return r;
    }
    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, const S& s) { return a *= s; }
    friend Matrix operator*(const S& s, Matrix a) { return a *= s; }
    friend Matrix operator*(const Matrix& a, const Matrix& b) { return mat_mul(a, b); }
    friend bool operator==(const Matrix& a, const Matrix& b) { return a.n_ == b.n_ && a.a_ == b.a_; }

    friend Matrix mat_mul(const Matrix& a, const Matrix& b) {
        if (a.n_ != b.n_) throw DimensionMismatch("mat_mul: dimension mismatch");
        const int n = a.n_;
        Matrix r(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                const S& aik = a(i, k);
                if (is_structural_zero(aik)) continue;
                for (int j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }

private:
    static bool is_structural_zero(const S& v) {
        if constexpr (is_exact_v<S>)
            return v.re == 0 && v.im == 0;
        else
            return v == S(0.0, 0.0);
    }
    void check_same(const Matrix& o) const {
        if (o.n_ != n_) throw DimensionMismatch("matrix dimension mismatch");
    }

    int n_ = 0;
    std::vector<S> a_;
};

using MatrixF = Matrix<Complex>;
using MatrixQ = Matrix<QComplex>;

template <class S>
double frobenius_norm(const Matrix<S>& a) {
    if constexpr (is_exact_v<S>) {
        mpq_class s = 0;
        for (const auto& v : a.entries()) s += v.re * v.re + v.im * v.im;
        return std::sqrt(s.get_d());
    } else {
        double s = 0;
        for (const auto& v : a.entries()) s += std::norm(v);
        return std::sqrt(s);
    }
}

template <class S>
bool is_zero_matrix(const Matrix<S>& a, double tol = 0.0) {
    for (const auto& v : a.entries())
        if (!ScalarTraits<S>::is_zero(v, tol)) return false;
    return true;
}

template <class S>
Matrix<S> mat_pow(const Matrix<S>& a, int p) {
    Matrix<S> r = Matrix<S>::identity(a.dim());
    for (int i = 0; i < p; ++i) r = r * a;
    return r;
}

template <class S>
Matrix<S> commutator(const Matrix<S>& a, const Matrix<S>& b) {
    return a * b - b * a;
}

template <class S>
Matrix<Complex> to_float(const Matrix<S>& a) {
    std::vector<Complex> e;
    e.reserve(a.entries().size());
    for (const auto& v : a.entries()) e.push_back(ScalarTraits<S>::to_float(v));
    return Matrix<Complex>(a.dim(), std::move(e));
}

template <class S>
Matrix<S> from_float(const Matrix<Complex>& a) {
    std::vector<S> e;
    e.reserve(a.entries().size());
    for (const auto& v : a.entries()) e.push_back(ScalarTraits<S>::from_float(v));
    return Matrix<S>(a.dim(), std::move(e));
}

inline Eigen::MatrixXcd to_eigen(const MatrixF& a) {
    Eigen::MatrixXcd m(a.dim(), a.dim());
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) m(i, j) = a(i, j);
    return m;
}

inline MatrixF from_eigen(const Eigen::MatrixXcd& m) {
    MatrixF a(int(m.rows()));
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) a(i, j) = m(i, j);
    return a;
}

// Gauss-Jordan inverse. Float mode uses partial pivoting and reports a
// Frobenius condition estimate when the matrix is numerically singular.
template <class S>
Matrix<S> inverse(const Matrix<S>& a, double singular_tol = 1e-13) {
    using T = ScalarTraits<S>;
    const int n = a.dim();
    Matrix<S> m(a), r = Matrix<S>::identity(n);
    const double scale = std::max(1.0, frobenius_norm(a));
    for (int c = 0; c < n; ++c) {
        int piv = -1;
        if constexpr (is_exact_v<S>) {
            for (int i = c; i < n; ++i)
                if (!T::is_zero(m(i, c), 0)) {
                    piv = i;
                    break;
                }
        } else {
            double best = -1;
            for (int i = c; i < n; ++i)
                if (T::abs(m(i, c)) > best) {
                    best = T::abs(m(i, c));
                    piv = i;
                }
            if (best <= singular_tol * scale) piv = -1;
        }
        if (piv < 0) {
            throw SingularMatrix("matrix is singular at working tolerance",
                                 std::numeric_limits<double>::infinity());
        }
        if (piv != c)
            for (int j = 0; j < n; ++j) {
                std::swap(m(piv, j), m(c, j));
                std::swap(r(piv, j), r(c, j));
            }
        const S inv = T::one() / m(c, c);
        for (int j = 0; j < n; ++j) {
            m(c, j) *= inv;
            r(c, j) *= inv;
        }
        for (int i = 0; i < n; ++i) {
            if (i == c || T::is_zero(m(i, c), 0)) continue;
            const S f = m(i, c);
            for (int j = 0; j < n; ++j) {
                m(i, j) -= f * m(c, j);
                r(i, j) -= f * r(c, j);
            }
        }
    }
    if constexpr (!is_exact_v<S>) {
        const double cond = frobenius_norm(a) * frobenius_norm(r);
        if (!std::isfinite(cond) || cond > 1.0 / singular_tol)
            throw SingularMatrix("matrix is ill-conditioned (condition estimate " + format_double(cond) + ")",
                                 cond);
    }
    return r;
}

template <class S>
double condition_estimate(const Matrix<S>& a) {
    try {
        return frobenius_norm(a) * frobenius_norm(inverse(a));
    } catch (const SingularMatrix& e) {
        return e.condition();
    }
}

// Reduced row echelon form; returns pivot columns. Exact mode only.
template <class S>
std::vector<int> rref_in_place(Matrix<S>& m) {
    using T = ScalarTraits<S>;
    const int n = m.dim();
    std::vector<int> pivots;
    int row = 0;
    for (int c = 0; c < n && row < n; ++c) {
        int piv = -1;
        for (int i = row; i < n; ++i)
            if (!T::is_zero(m(i, c), 0)) {
                piv = i;
                break;
            }
        if (piv < 0) continue;
        if (piv != row)
            for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(row, j));
        const S inv = T::one() / m(row, c);
        for (int j = 0; j < n; ++j) m(row, j) *= inv;
        for (int i = 0; i < n; ++i) {
            if (i == row || T::is_zero(m(i, c), 0)) continue;
            const S f = m(i, c);
            for (int j = 0; j < n; ++j) m(i, j) -= f * m(row, j);
        }
        pivots.push_back(c);
        ++row;
    }
    return pivots;
}

// Column vectors are stored as std::vector<S> of length n.
template <class S>
using Vec = std::vector<S>;

// Rank with absolute singular-value threshold `tol` (ignored in exact mode).
template <class S>
int rank_of(const Matrix<S>& a, double tol) {
    if constexpr (is_exact_v<S>) {
        Matrix<S> m(a);
        return int(rref_in_place(m).size());
    } else {
        if (a.dim() == 0) return 0;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(a));
        int r = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > tol) ++r;
        return r;
    }
}

// Basis of the null space.
template <class S>
std::vector<Vec<S>> kernel_basis(const Matrix<S>& a, double tol) {
    using T = ScalarTraits<S>;
    const int n = a.dim();
    std::vector<Vec<S>> basis;
    if constexpr (is_exact_v<S>) {
        Matrix<S> m(a);
        auto piv = rref_in_place(m);
        std::vector<bool> is_piv(n, false);
        for (int c : piv) is_piv[c] = true;
        for (int f = 0; f < n; ++f) {
            if (is_piv[f]) continue;
            Vec<S> v(n, T::zero());
            v[f] = T::one();
            for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m(int(r), f);
            basis.push_back(std::move(v));
        }
    } else {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(a), Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        for (int i = 0; i < n; ++i) {
            if (sv(i) > tol) continue;
            Vec<S> v(n);
            for (int k = 0; k < n; ++k) v[k] = svd.matrixV()(k, i);
            basis.push_back(std::move(v));
        }
    }
    return basis;
}

template <class S>
Vec<S> mat_vec(const Matrix<S>& a, const Vec<S>& v) {
    const int n = a.dim();
    Vec<S> r(n, ScalarTraits<S>::zero());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r[i] += a(i, j) * v[j];
    return r;
}

template <class S>
double vec_norm(const Vec<S>& v) {
    double s = 0;
    for (const auto& x : v) s += ScalarTraits<S>::abs2(x);
    return std::sqrt(s);
}

// Rank of the column set `cols` (n-vectors), thresholded relative to unit columns.
template <class S>
int column_rank(const std::vector<Vec<S>>& cols, int n, double tol) {
    if (cols.empty()) return 0;
    if constexpr (is_exact_v<S>) {
        const int k = int(cols.size());
        const int d = std::max(n, k);
        Matrix<S> m(d);
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < n; ++i) m(i, j) = cols[j][i];
        return int(rref_in_place(m).size());
    } else {
        Eigen::MatrixXcd m(n, cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const double nv = vec_norm(cols[j]);
            for (int i = 0; i < n; ++i) m(i, j) = nv > 0 ? cols[j][i] / nv : cols[j][i];
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        int r = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > tol) ++r;
        return r;
    }
}

} // namespace gmoi
