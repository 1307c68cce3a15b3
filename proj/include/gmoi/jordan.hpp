#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace gmoi {

template <class S>
struct SpectralBlock {
    S eigenvalue;
    int eigenIndex = 0;  // k, 0-based position in the distinct-eigenvalue list
    int blockIndex = 0;  // i, 0-based within the eigenvalue
    int order = 1;       // m: smallest power annihilating the nilpotent
    Matrix<S> projector;
    Matrix<S> nilpotent;
    std::vector<Matrix<S>> powers;  // powers[0] = P, powers[q] = N^q for 1 <= q < order

    const Matrix<S>& factor(int q) const { return powers.at(q); }
};

template <class S>
struct JordanDecomposition {
    int dim = 0;
    std::vector<SpectralBlock<S>> blocks;
    std::vector<S> eigenvalues;
    std::vector<int> geomMultiplicities;
    std::vector<int> algMultiplicities;
    Matrix<S> transform;
    Matrix<S> inverseTransform;
    Matrix<S> source;
    double toleranceUsed = 0;

    int distinct_count() const { return int(eigenvalues.size()); }
    int max_order() const {
        int m = 1;
        for (const auto& b : blocks) m = std::max(m, b.order);
        return m;
    }
    bool diagonalizable() const { return max_order() == 1; }
};

using DecompositionF = JordanDecomposition<Complex>;
using DecompositionQ = JordanDecomposition<QComplex>;

template <class S>
struct BlockSpec {
    S eigenvalue;
    int size = 1;
};

enum class DecomposeMode { Auto, Prescribed };

template <class S>
Matrix<S> jordan_matrix(const std::vector<BlockSpec<S>>& specs) {
    int n = 0;
    for (const auto& b : specs) n += b.size;
    Matrix<S> j(n);
    int off = 0;
    for (const auto& b : specs) {
        for (int r = 0; r < b.size; ++r) {
            j(off + r, off + r) = b.eigenvalue;
            if (r + 1 < b.size) j(off + r, off + r + 1) = ScalarTraits<S>::one();
        }
        off += b.size;
    }
    return j;
}

namespace detail {

template <class S>
bool same_eigenvalue(const S& a, const S& b, double tol) {
    return ScalarTraits<S>::near(a, b, tol);
}

// Lexicographic (re, im) with a tolerance band on the real part in float mode.
template <class S>
bool eig_less(const S& a, const S& b, double tol) {
    using T = ScalarTraits<S>;
    if constexpr (is_exact_v<S>) {
        return T::less(a, b);
    } else {
        if (std::abs(a.real() - b.real()) > tol) return a.real() < b.real();
        if (std::abs(a.imag() - b.imag()) > tol) return a.imag() < b.imag();
        return false;
    }
}

} // namespace detail

// Builds spectral data from a similarity V and Jordan blocks (columns of V in
// block order). Blocks are reordered to the canonical ordering: eigenvalue
// lexicographic (re, im), then decreasing size, ties by original position.
template <class S>
JordanDecomposition<S> from_jordan_form(const Matrix<S>& v, std::vector<BlockSpec<S>> specs, double tol,
                                        std::optional<std::type_identity_t<Matrix<S>>> vinv_opt = std::nullopt) {
    using T = ScalarTraits<S>;
    const int n = v.dim();
    int total = 0;
    for (const auto& b : specs) {
        if (b.size < 1) throw ValidationError("block size must be positive");
        total += b.size;
    }
    if (total != n) throw DimensionMismatch("block sizes do not sum to the matrix dimension");

    std::vector<int> offs(specs.size());
    for (std::size_t i = 0, o = 0; i < specs.size(); o += specs[i].size, ++i) offs[i] = int(o);

    // Distinct eigenvalues in canonical order.
    std::vector<S> distinct;
    for (const auto& b : specs) {
        bool found = false;
        for (const auto& d : distinct)
            if (detail::same_eigenvalue(d, b.eigenvalue, tol)) found = true;
        if (!found) distinct.push_back(b.eigenvalue);
    }
    std::stable_sort(distinct.begin(), distinct.end(),
                     [&](const S& a, const S& b) { return detail::eig_less(a, b, tol); });
    auto eig_index = [&](const S& l) {
        for (std::size_t k = 0; k < distinct.size(); ++k)
            if (detail::same_eigenvalue(distinct[k], l, tol)) return int(k);
        return -1;
    };

    std::vector<int> order(specs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const int ka = eig_index(specs[a].eigenvalue), kb = eig_index(specs[b].eigenvalue);
        if (ka != kb) return ka < kb;
        return specs[a].size > specs[b].size;
    });

    // Reorder the columns of V to match.
    Matrix<S> vv(n);
    std::vector<BlockSpec<S>> sorted;
    std::vector<int> col_perm;
    for (int idx : order) {
        for (int r = 0; r < specs[idx].size; ++r) col_perm.push_back(offs[idx] + r);
        sorted.push_back(specs[idx]);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) vv(i, j) = v(i, col_perm[j]);
    Matrix<S> vinv(n);
    if (vinv_opt) {
        Matrix<S> src = *vinv_opt;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) vinv(i, j) = src(col_perm[i], j);
    } else {
        vinv = inverse(vv);
    }

    JordanDecomposition<S> d;
    d.dim = n;
    d.transform = vv;
    d.inverseTransform = vinv;
    d.toleranceUsed = tol;
    d.eigenvalues = distinct;
    d.geomMultiplicities.assign(distinct.size(), 0);
    d.algMultiplicities.assign(distinct.size(), 0);

    int off = 0;
    for (const auto& b : sorted) {
        SpectralBlock<S> sb;
        sb.eigenIndex = eig_index(b.eigenvalue);
        sb.eigenvalue = distinct[sb.eigenIndex];
        sb.blockIndex = d.geomMultiplicities[sb.eigenIndex]++;
        d.algMultiplicities[sb.eigenIndex] += b.size;
        sb.order = b.size;
        // P = V E V^{-1}, N = V S V^{-1} restricted to the block's columns/rows.
        sb.projector = Matrix<S>(n);
        sb.nilpotent = Matrix<S>(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                S p = T::zero(), q = T::zero();
                for (int r = 0; r < b.size; ++r) {
                    p += vv(i, off + r) * vinv(off + r, j);
                    if (r + 1 < b.size) q += vv(i, off + r) * vinv(off + r + 1, j);
                }
                sb.projector(i, j) = p;
                sb.nilpotent(i, j) = q;
            }
        sb.powers.push_back(sb.projector);
        for (int q = 1; q < sb.order; ++q) sb.powers.push_back(q == 1 ? sb.nilpotent : sb.powers.back() * sb.nilpotent);
        d.blocks.push_back(std::move(sb));
        off += b.size;
    }
    Matrix<S> x(n);
    for (const auto& b : d.blocks) x += b.eigenvalue * b.projector + b.nilpotent;
    d.source = x;
    return d;
}

template <class S>
Matrix<S> reconstruct(const JordanDecomposition<S>& j) {
    Matrix<S> x(j.dim);
    for (const auto& b : j.blocks) x += b.eigenvalue * b.projector + b.nilpotent;
    return x;
}

template <class S>
std::pair<Matrix<S>, Matrix<S>> split_parts(const JordanDecomposition<S>& j) {
    Matrix<S> p(j.dim), nn(j.dim);
    for (const auto& b : j.blocks) {
        p += b.eigenvalue * b.projector;
        nn += b.nilpotent;
    }
    return {p, nn};
}

struct ValidationReport {
    double idempotency = 0;     // max ||P^2 - P||
    double orthogonality = 0;   // max ||P_a P_b|| over a != b
    double completeness = 0;    // ||sum P - I||
    double nilpotency = 0;      // max ||N^m||
    double confinement = 0;     // max ||PN - N|| + ||NP - N||
    double reconstruction = 0;  // ||sum(lambda P + N) - source||
    bool ordersMinimal = true;  // N^(m-1) != 0 whenever m > 1
    double max_residual() const {
        return std::max({idempotency, orthogonality, completeness, nilpotency, confinement, reconstruction});
    }
    bool ok(double tol) const { return max_residual() <= tol && ordersMinimal; }
};

template <class S>
ValidationReport validate(const JordanDecomposition<S>& j) {
    ValidationReport r;
    const int n = j.dim;
    Matrix<S> sum(n);
    for (std::size_t a = 0; a < j.blocks.size(); ++a) {
        const auto& b = j.blocks[a];
        r.idempotency = std::max(r.idempotency, frobenius_norm(b.projector * b.projector - b.projector));
        for (std::size_t c = 0; c < j.blocks.size(); ++c)
            if (c != a) r.orthogonality = std::max(r.orthogonality, frobenius_norm(b.projector * j.blocks[c].projector));
        sum += b.projector;
        Matrix<S> nm = mat_pow(b.nilpotent, b.order);
        r.nilpotency = std::max(r.nilpotency, frobenius_norm(nm));
        if (b.order > 1) {
            const double last = frobenius_norm(mat_pow(b.nilpotent, b.order - 1));
            if (last <= std::max(j.toleranceUsed, 0.0)) r.ordersMinimal = false;
        }
        r.confinement = std::max(r.confinement, frobenius_norm(b.projector * b.nilpotent - b.nilpotent) +
                                                    frobenius_norm(b.nilpotent * b.projector - b.nilpotent));
    }
    r.completeness = frobenius_norm(sum - Matrix<S>::identity(n));
    if (j.source.dim() == n) r.reconstruction = frobenius_norm(reconstruct(j) - j.source);
    return r;
}

namespace detail {

template <class S>
void require_valid(const JordanDecomposition<S>& d, double tol) {
    const auto rep = validate(d);
    const double scale = std::max(1.0, frobenius_norm(d.source));
    if (rep.max_residual() > tol * scale)
        throw ValidationError("decomposition validation failed (max residual " + format_double(rep.max_residual()) +
                              ")");
}

// Rational approximation by continued fractions with bounded denominator.
// Continued-fraction convergents of x with denominator <= max_den that lie
// within tol (relative) of x, in order of increasing denominator.
inline std::vector<mpq_class> rational_candidates(double x, long max_den = 10000, double tol = 1e-7) {
    std::vector<mpq_class> out;
    if (!std::isfinite(x)) return out;
    long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    double r = x;
    for (int it = 0; it < 40; ++it) {
        const double a = std::floor(r);
        const long ai = long(a);
        const long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
        if (k2 > max_den) break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (std::abs(double(h1) / double(k1) - x) <= tol * std::max(1.0, std::abs(x))) out.emplace_back(h1, k1);
        const double frac = r - a;
        if (frac < 1e-15) break;
        r = 1.0 / frac;
    }
    for (auto& q : out) q.canonicalize();
    return out;
}

inline std::optional<mpq_class> rationalize(double x, long max_den = 10000, double tol = 1e-7) {
    const auto c = rational_candidates(x, max_den, tol);
    if (c.empty()) return std::nullopt;
    return c.front();
}

// Rank threshold for powers of A: relative to the power's norm, with a
// round-off floor that grows like scale^s.
inline double power_threshold(const MatrixF& ap, double tol, double scale, int s) {
    return std::max(tol * frobenius_norm(ap), 1e3 * std::numeric_limits<double>::epsilon() * std::pow(scale, s));
}

// Float chain heads: choose directions in ker(A^s) whose images under A^(s-1)
// are orthogonal to the already collected bottoms, via SVD.
inline std::vector<std::vector<Vec<Complex>>> chains_float(const MatrixF& a, const std::vector<int>& counts,
                                                           double tol, double scale) {
    const int n = a.dim();
    std::vector<std::vector<Vec<Complex>>> chains;
    Eigen::MatrixXcd bottoms(n, 0);
    const int smax = int(counts.size()) - 1;
    for (int s = smax; s >= 1; --s) {
        const int need = counts[s];
        if (need == 0) continue;
        MatrixF as = mat_pow(a, s), as1 = mat_pow(a, s - 1);
        auto ker = kernel_basis(as, power_threshold(as, tol, scale, s));
        Eigen::MatrixXcd w(n, ker.size());
        for (std::size_t c = 0; c < ker.size(); ++c)
            for (int i = 0; i < n; ++i) w(i, c) = ker[c][i];
        Eigen::MatrixXcd img = to_eigen(as1) * w;
        if (bottoms.cols() > 0) {
            Eigen::HouseholderQR<Eigen::MatrixXcd> qr(bottoms);
            Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, bottoms.cols());
            img -= q * (q.adjoint() * img);
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(img, Eigen::ComputeFullV);
        if (svd.singularValues().size() < need || svd.singularValues()(need - 1) <= power_threshold(as1, tol, scale, s - 1))
            throw ValidationError("generalized eigenvector chain construction failed");
        for (int c = 0; c < need; ++c) {
            Eigen::VectorXcd head = w * svd.matrixV().col(c);
            head /= head.norm();
            std::vector<Vec<Complex>> chain(s);
            Eigen::VectorXcd cur = head;
            for (int r = s - 1; r >= 0; --r) {
                chain[r].assign(cur.data(), cur.data() + n);
                cur = to_eigen(a) * cur;
            }
            Eigen::VectorXcd bottom(n);
            for (int i = 0; i < n; ++i) bottom(i) = chain[0][i];
            bottoms.conservativeResize(n, bottoms.cols() + 1);
            bottoms.col(bottoms.cols() - 1) = bottom;
            chains.push_back(std::move(chain));
        }
    }
    return chains;
}

// Exact chain heads: greedy over a kernel basis, keeping bottoms independent.
inline std::vector<std::vector<Vec<QComplex>>> chains_exact(const MatrixQ& a, const std::vector<int>& counts) {
    const int n = a.dim();
    std::vector<std::vector<Vec<QComplex>>> chains;
    std::vector<Vec<QComplex>> bottoms;
    const int smax = int(counts.size()) - 1;
    for (int s = smax; s >= 1; --s) {
        int need = counts[s];
        if (need == 0) continue;
        MatrixQ as = mat_pow(a, s), as1 = mat_pow(a, s - 1);
        for (const auto& v : kernel_basis(as, 0.0)) {
            if (need == 0) break;
            Vec<QComplex> bottom = mat_vec(as1, v);
            bottoms.push_back(bottom);
            if (column_rank(bottoms, n, 0.0) < int(bottoms.size())) {
                bottoms.pop_back();
                continue;
            }
            std::vector<Vec<QComplex>> chain(s);
            Vec<QComplex> cur = v;
            for (int r = s - 1; r >= 0; --r) {
                chain[r] = cur;
                cur = mat_vec(a, cur);
            }
            chains.push_back(std::move(chain));
            --need;
        }
        if (need > 0) throw ValidationError("generalized eigenvector chain construction failed");
    }
    return chains;
}

} // namespace detail

// Auto mode: eigenvalues, clustering, rank profiling of (X - lambda I)^s,
// chain construction. Exact mode certifies rational eigenvalues exactly.
template <class S>
JordanDecomposition<S> decompose_auto(const Matrix<S>& x, double tol) {
    const int n = x.dim();
    if (n == 0) throw ValidationError("empty matrix");
    const MatrixF xf = to_float(x);
    const double scale = std::max(1.0, frobenius_norm(xf));
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(to_eigen(xf), false);
    if (es.info() != Eigen::Success) throw ValidationError("eigenvalue computation failed");
    const auto ev = es.eigenvalues();

    // Single-linkage clustering within radius sqrt(tol) * scale.
    const double radius = std::sqrt(tol) * scale;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(ev(i) - ev(j)) <= radius) parent[find(i)] = find(j);
    std::vector<int> roots;
    std::vector<Complex> centers;
    std::vector<int> sizes;
    for (int i = 0; i < n; ++i) {
        const int r = find(i);
        auto it = std::find(roots.begin(), roots.end(), r);
        if (it == roots.end()) {
            roots.push_back(r);
            centers.push_back(ev(i));
            sizes.push_back(1);
        } else {
            const auto k = it - roots.begin();
            centers[k] += ev(i);
            sizes[k] += 1;
        }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) centers[k] /= double(sizes[k]);
    for (std::size_t a = 0; a < centers.size(); ++a)
        for (std::size_t b = a + 1; b < centers.size(); ++b)
            if (std::abs(centers[a] - centers[b]) <= 10 * radius)
                throw AmbiguousClustering("eigenvalue clusters " + format_double(std::abs(centers[a] - centers[b])) +
                                          " apart are within the ambiguity band");

    std::vector<S> lambdas;
    for (const auto& c : centers) {
        if constexpr (is_exact_v<S>) {
            // First candidate that makes X - lambda I exactly singular.
            std::optional<QComplex> found;
            for (const auto& re : detail::rational_candidates(c.real())) {
                for (const auto& im : detail::rational_candidates(c.imag())) {
                    const QComplex lam(re, im);
                    if (rank_of(Matrix<S>(x - lam * Matrix<S>::identity(n)), 0.0) < n) {
                        found = lam;
                        break;
                    }
                }
                if (found) break;
            }
            if (!found) throw ValidationError("exact auto mode needs rational eigenvalues; use prescribed mode");
            lambdas.push_back(*found);
        } else {
            lambdas.push_back(c);
        }
    }

    std::vector<BlockSpec<S>> specs;
    std::vector<Vec<S>> columns;
    int alg_total = 0;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        Matrix<S> a = x - lambdas[k] * Matrix<S>::identity(n);
        std::vector<int> ranks{n};
        Matrix<S> ap = Matrix<S>::identity(n);
        while (true) {
            ap = ap * a;
            double thr = 0.0;
            if constexpr (!is_exact_v<S>) thr = detail::power_threshold(ap, tol, scale, int(ranks.size()));
            const int r = rank_of(ap, thr);
            if (r == ranks.back() || int(ranks.size()) > n) break;
            ranks.push_back(r);
        }
        const int alg = n - ranks.back();
        if constexpr (!is_exact_v<S>) {
            if (alg != sizes[k])
                throw ValidationError("rank profile disagrees with eigenvalue cluster size; structure is ill-posed");
        }
        if (alg == 0) throw ValidationError("candidate eigenvalue is not an eigenvalue");
        alg_total += alg;
        ranks.push_back(ranks.back());
        const int smax = int(ranks.size()) - 2;
        std::vector<int> counts(smax + 1, 0);
        for (int s = 1; s <= smax; ++s) counts[s] = (ranks[s - 1] - ranks[s]) - (ranks[s] - ranks[s + 1]);
        std::vector<std::vector<Vec<S>>> chains;
        if constexpr (is_exact_v<S>)
            chains = detail::chains_exact(a, counts);
        else
            chains = detail::chains_float(a, counts, tol, scale);
        for (auto& ch : chains) {
            specs.push_back({lambdas[k], int(ch.size())});
            for (auto& c : ch) columns.push_back(std::move(c));
        }
    }
    if (alg_total != n) throw ValidationError("eigenvalues could not be certified (algebraic multiplicities do not sum to n)");
    Matrix<S> v(n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) v(i, j) = columns[j][i];
    auto d = from_jordan_form(v, specs, is_exact_v<S> ? 0.0 : radius);
    d.source = x;
    d.toleranceUsed = tol;
    detail::require_valid(d, is_exact_v<S> ? 0.0 : std::max(tol, 1e-9));
    return d;
}

// Prescribed mode: the caller supplies V and block sizes; the eigenvalues are
// read off V^{-1} X V, which must be in Jordan form with those sizes.
template <class S>
JordanDecomposition<S> decompose_prescribed(const Matrix<S>& x, const Matrix<S>& v, const std::vector<int>& sizes,
                                            double tol) {
    const int n = x.dim();
    if (v.dim() != n) throw DimensionMismatch("transform dimension mismatch");
    const Matrix<S> vinv = inverse(v);
    const Matrix<S> j = vinv * x * v;
    std::vector<BlockSpec<S>> specs;
    int off = 0;
    for (int s : sizes) {
        if (s < 1 || off + s > n) throw ValidationError("block sizes do not fit the matrix dimension");
        specs.push_back({j(off, off), s});
        off += s;
    }
    if (off != n) throw DimensionMismatch("block sizes do not sum to the matrix dimension");
    const Matrix<S> expected = jordan_matrix(specs);
    const double res = frobenius_norm(j - expected);
    const double scale = std::max(1.0, frobenius_norm(x));
    if (is_exact_v<S> ? res != 0.0 : res > tol * scale)
        throw ValidationError("V^{-1} X V is not in the prescribed Jordan form (residual " + format_double(res) + ")");
    auto d = from_jordan_form(v, specs, tol, vinv);
    d.source = x;
    d.toleranceUsed = tol;
    detail::require_valid(d, is_exact_v<S> ? 0.0 : tol);
    return d;
}

template <class S>
JordanDecomposition<S> decompose(const Matrix<S>& x, double tol, DecomposeMode mode = DecomposeMode::Auto,
                                 const Matrix<S>* v = nullptr, const std::vector<int>* sizes = nullptr) {
    if (mode == DecomposeMode::Prescribed) {
        if (!v || !sizes) throw ValidationError("prescribed mode needs a transform and block sizes");
        return decompose_prescribed(x, *v, *sizes, tol);
    }
    return decompose_auto(x, tol);
}

// Signature used to detect structure changes along a family: per distinct
// eigenvalue, the sorted block sizes.
template <class S>
std::vector<std::vector<int>> structure_signature(const JordanDecomposition<S>& d) {
    std::vector<std::vector<int>> sig(d.eigenvalues.size());
    for (const auto& b : d.blocks) sig[b.eigenIndex].push_back(b.order);
    return sig;
}

} // namespace gmoi
