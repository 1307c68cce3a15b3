#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "matrix.hpp"

namespace gmoi {

inline constexpr double kConfluenceTol = 1e-8;

// r-variate scalar function with an exact partial-derivative oracle.
template <class S>
class MultiFunction {
public:
    virtual ~MultiFunction() = default;
    virtual int arity() const = 0;
    virtual std::string kind() const = 0;
    // Highest derivative order supported in any single argument.
    virtual int max_order() const { return INT_MAX; }
    virtual S partial(std::span<const int> q, std::span<const S> z) const = 0;
    S eval(std::span<const S> z) const {
        std::vector<int> q(z.size(), 0);
        return partial(q, z);
    }
    S eval(std::initializer_list<S> z) const { return eval(std::span<const S>(z.begin(), z.size())); }
    S partial(std::initializer_list<int> q, std::initializer_list<S> z) const {
        return partial(std::span<const int>(q.begin(), q.size()), std::span<const S>(z.begin(), z.size()));
    }

protected:
    void check_args(std::span<const int> q, std::span<const S> z) const {
        if (int(q.size()) != arity() || int(z.size()) != arity())
            throw DimensionMismatch(kind() + ": expected " + std::to_string(arity()) + " arguments");
        for (int v : q) {
            if (v < 0) throw ValidationError(kind() + ": negative derivative order");
            if (v > max_order())
                throw UnsupportedOrder(kind() + ": derivative order " + std::to_string(v) + " exceeds maxOrder " +
                                       std::to_string(max_order()));
        }
    }
};

template <class S>
using FunctionPtr = std::shared_ptr<const MultiFunction<S>>;

// Arity-1 function exposing Taylor jets f^(s)(z0)/s!, s = 0..order.
template <class S>
class UnivariateFunction : public MultiFunction<S> {
public:
    using MultiFunction<S>::partial;
    int arity() const override { return 1; }
    virtual std::vector<S> jet(const S& z0, int order) const = 0;
    // Direct matrix evaluation (Horner, series, or p(M) q(M)^{-1}).
    virtual Matrix<S> apply(const Matrix<S>& m) const = 0;
    // Polynomial degree, or -1 when not a polynomial.
    virtual int degree() const { return -1; }
    S partial(std::span<const int> q, std::span<const S> z) const override {
        this->check_args(q, z);
        auto j = jet(z[0], q[0]);
        return j[q[0]] * factorial<S>(q[0]);
    }
    S derivative(int q, const S& z) const {
        const int qa[1] = {q};
        const S za[1] = {z};
        return partial(std::span<const int>(qa, 1), std::span<const S>(za, 1));
    }
};

template <class S>
using UnivariatePtr = std::shared_ptr<const UnivariateFunction<S>>;

template <class S>
class Polynomial final : public UnivariateFunction<S> {
public:
    explicit Polynomial(std::vector<S> coeffs, int max_order = INT_MAX) : c_(std::move(coeffs)), max_(max_order) {
        if (c_.empty()) c_.push_back(ScalarTraits<S>::zero());
    }
    using MultiFunction<S>::partial;
    std::string kind() const override { return "polynomial"; }
    int max_order() const override { return max_; }
    int degree() const override {
        for (int k = int(c_.size()) - 1; k > 0; --k)
            if (!ScalarTraits<S>::is_zero(c_[k], 0.0)) return k;
        return 0;
    }
    const std::vector<S>& coeffs() const { return c_; }

    std::vector<S> jet(const S& z0, int order) const override {
        if (order > max_) throw UnsupportedOrder("polynomial: order exceeds maxOrder");
        // Taylor shift by repeated synthetic division.
        std::vector<S> a = c_;
        std::vector<S> out(order + 1, ScalarTraits<S>::zero());
        const int d = int(a.size()) - 1;
        for (int s = 0; s <= std::min(order, d); ++s) {
            for (int k = d - 1; k >= s; --k) a[k] += z0 * a[k + 1];
            out[s] = a[s];
        }
        return out;
    }
    Matrix<S> apply(const Matrix<S>& m) const override {
        const int n = m.dim();
        Matrix<S> r(n);
        for (int k = int(c_.size()) - 1; k >= 0; --k) {
            r = r * m;
            for (int i = 0; i < n; ++i) r(i, i) += c_[k];
        }
        return r;
    }

private:
    std::vector<S> c_;
    int max_;
};

template <class S>
class Exponential final : public UnivariateFunction<S> {
public:
    explicit Exponential(int max_order = INT_MAX) : max_(max_order) {}
    using MultiFunction<S>::partial;
    std::string kind() const override { return "exp"; }
    int max_order() const override { return max_; }
    std::vector<S> jet(const S& z0, int order) const override {
        if (order > max_) throw UnsupportedOrder("exp: order exceeds maxOrder");
        S base;
        if constexpr (is_exact_v<S>) {
            if (!(z0 == ScalarTraits<S>::zero()))
                throw ValidationError("exp is not exactly representable away from 0; use a truncated series");
            base = ScalarTraits<S>::one();
        } else {
            base = std::exp(z0);
        }
        std::vector<S> out(order + 1);
        for (int s = 0; s <= order; ++s) out[s] = base / factorial<S>(s);
        return out;
    }
    Matrix<S> apply(const Matrix<S>& m) const override {
        if constexpr (is_exact_v<S>) {
            throw ValidationError("exp matrix evaluation is not available in exact mode");
        } else {
            // Scaling and squaring with a Taylor core.
            const double nrm = frobenius_norm(m);
            int sq = 0;
            while (nrm / std::pow(2.0, sq) > 0.25) ++sq;
            Matrix<S> a = m * S(1.0 / std::pow(2.0, sq), 0.0);
            Matrix<S> term = Matrix<S>::identity(m.dim()), sum = term;
            for (int k = 1; k < 30; ++k) {
                term = term * a * S(1.0 / k, 0.0);
                sum += term;
            }
            for (int i = 0; i < sq; ++i) sum = sum * sum;
            return sum;
        }
    }

private:
    int max_;
};

template <class S>
class RationalFunction final : public UnivariateFunction<S> {
public:
    RationalFunction(std::vector<S> num, std::vector<S> den, int max_order = INT_MAX)
        : p_(std::move(num)), q_(std::move(den)), max_(max_order) {
        if (q_.degree() == 0 && ScalarTraits<S>::is_zero(q_.coeffs()[0], 0.0)) throw ValidationError("rational: zero denominator");
    }
    using MultiFunction<S>::partial;
    std::string kind() const override { return "rational"; }
    int max_order() const override { return max_; }
    const Polynomial<S>& numerator() const { return p_; }
    const Polynomial<S>& denominator() const { return q_; }

    std::vector<S> jet(const S& z0, int order) const override {
        if (order > max_) throw UnsupportedOrder("rational: order exceeds maxOrder");
        auto a = p_.jet(z0, order), b = q_.jet(z0, order);
        if (ScalarTraits<S>::is_zero(b[0], 1e-14)) throw PoleError("rational: evaluation at a pole");
        std::vector<S> r(order + 1);
        for (int s = 0; s <= order; ++s) {
            S acc = a[s];
            for (int i = 1; i <= s; ++i) acc -= b[i] * r[s - i];
            r[s] = acc / b[0];
        }
        return r;
    }
    Matrix<S> apply(const Matrix<S>& m) const override {
        Matrix<S> den = q_.apply(m);
        try {
            return p_.apply(m) * inverse(den);
        } catch (const SingularMatrix&) {
            throw PoleError("rational: denominator singular at the matrix argument");
        }
    }

private:
    Polynomial<S> p_, q_;
    int max_;
};

template <class S>
UnivariatePtr<S> make_polynomial(std::vector<S> coeffs) {
    return std::make_shared<Polynomial<S>>(std::move(coeffs));
}

template <class S>
UnivariatePtr<S> make_power(int d) {
    std::vector<S> c(d + 1, ScalarTraits<S>::zero());
    c[d] = ScalarTraits<S>::one();
    return std::make_shared<Polynomial<S>>(std::move(c));
}

template <class S>
UnivariatePtr<S> make_exp() {
    return std::make_shared<Exponential<S>>();
}

// Taylor polynomial of exp through degree `order`, exact in rational mode.
template <class S>
UnivariatePtr<S> make_truncated_exp(int order) {
    std::vector<S> c(order + 1);
    for (int k = 0; k <= order; ++k) c[k] = ScalarTraits<S>::one() / factorial<S>(k);
    return std::make_shared<Polynomial<S>>(std::move(c));
}

template <class S>
UnivariatePtr<S> make_rational(std::vector<S> num, std::vector<S> den) {
    return std::make_shared<RationalFunction<S>>(std::move(num), std::move(den));
}

// Builtin factory by name: exp, power(d), polynomial(coeffs), rational(p, q).
template <class S>
UnivariatePtr<S> builtin(const std::string& name, const std::vector<S>& a = {}, const std::vector<S>& b = {},
                         int d = 0) {
    if (name == "exp") return make_exp<S>();
    if (name == "polynomial") return make_polynomial<S>(a);
    if (name == "power") return make_power<S>(d);
    if (name == "rational") return make_rational<S>(a, b);
    throw ValidationError("unknown builtin function: " + name);
}

namespace detail {

template <class S>
bool confluent(const S& a, const S& b, double ctol) {
    using T = ScalarTraits<S>;
    if constexpr (is_exact_v<S>) {
        return a == b;
    } else {
        return T::abs(a - b) <= ctol * std::max({1.0, T::abs(a), T::abs(b)});
    }
}

} // namespace detail

// Divided difference f[z_0, ..., z_k] with the confluent rule for repeated
// (or near-coincident) nodes: f[l, ..., l] (s+1 copies) = f^(s)(l)/s!.
template <class S>
S divided_difference(const UnivariateFunction<S>& f, std::span<const S> nodes, double ctol = kConfluenceTol) {
    const int m = int(nodes.size());
    if (m == 0) throw ValidationError("divided difference needs at least one node");
    // Cluster coincident nodes (single linkage) and lay clusters out contiguously.
    std::vector<int> cluster(m, -1);
    int nc = 0;
    for (int i = 0; i < m; ++i) {
        if (cluster[i] >= 0) continue;
        cluster[i] = nc;
        std::vector<int> stack{i};
        while (!stack.empty()) {
            const int a = stack.back();
            stack.pop_back();
            for (int b = 0; b < m; ++b)
                if (cluster[b] < 0 && detail::confluent(nodes[a], nodes[b], ctol)) {
                    cluster[b] = nc;
                    stack.push_back(b);
                }
        }
        ++nc;
    }
    std::vector<int> mult(nc, 0);
    std::vector<S> rep(nc);
    std::vector<bool> seen(nc, false);
    for (int i = 0; i < m; ++i) {
        ++mult[cluster[i]];
        if (!seen[cluster[i]]) {
            rep[cluster[i]] = nodes[i];
            seen[cluster[i]] = true;
        }
    }
    std::vector<std::vector<S>> jets(nc);
    for (int c = 0; c < nc; ++c) jets[c] = f.jet(rep[c], mult[c] - 1);
    std::vector<int> cl;
    std::vector<S> z;
    for (int c = 0; c < nc; ++c)
        for (int r = 0; r < mult[c]; ++r) {
            cl.push_back(c);
            z.push_back(rep[c]);
        }
    std::vector<S> dd(m);
    for (int i = 0; i < m; ++i) dd[i] = jets[cl[i]][0];
    for (int k = 1; k < m; ++k)
        for (int i = 0; i + k < m; ++i) {
            if (cl[i] == cl[i + k])
                dd[i] = jets[cl[i]][k];
            else
                dd[i] = (dd[i + 1] - dd[i]) / (z[i + k] - z[i]);
        }
    return dd[0];
}

template <class S>
S divided_difference(const UnivariateFunction<S>& f, const std::vector<S>& nodes, double ctol = kConfluenceTol) {
    return divided_difference(f, std::span<const S>(nodes), ctol);
}

// f^{[k]} as a (k+1)-variate function. Partials use node repetition:
// d^q f^{[k]} = prod q_j! * f[..., z_j repeated q_j + 1 times, ...].
template <class S>
class DividedDifferenceLift final : public MultiFunction<S> {
public:
    DividedDifferenceLift(UnivariatePtr<S> base, int order, double ctol = kConfluenceTol)
        : base_(std::move(base)), k_(order), ctol_(ctol) {
        if (k_ < 0) throw ValidationError("dd-lift: negative order");
    }
    int arity() const override { return k_ + 1; }
    using MultiFunction<S>::partial;
    std::string kind() const override { return "dd-lift"; }
    int max_order() const override {
        const int b = base_->max_order();
        return b == INT_MAX ? INT_MAX : b - k_;
    }
    const UnivariatePtr<S>& base() const { return base_; }
    int order() const { return k_; }

    S partial(std::span<const int> q, std::span<const S> z) const override {
        this->check_args(q, z);
        int total = 0;
        for (int v : q) total += v;
        if (base_->max_order() != INT_MAX && total + k_ > base_->max_order())
            throw UnsupportedOrder("dd-lift: total order exceeds base maxOrder");
        std::vector<S> nodes;
        S scale = ScalarTraits<S>::one();
        for (int j = 0; j <= k_; ++j) {
            for (int r = 0; r <= q[j]; ++r) nodes.push_back(z[j]);
            scale *= factorial<S>(q[j]);
        }
        return scale * divided_difference(*base_, std::span<const S>(nodes), ctol_);
    }

private:
    UnivariatePtr<S> base_;
    int k_;
    double ctol_;
};

template <class S>
FunctionPtr<S> lift_divided_difference(const UnivariatePtr<S>& f, int order) {
    if (order == 0) return f;
    return std::make_shared<DividedDifferenceLift<S>>(f, order);
}

// Sum of monomials c * prod z_j^{a_j}; exact partials.
template <class S>
class MonomialSum final : public MultiFunction<S> {
public:
    struct Term {
        S coeff;
        std::vector<int> powers;
    };
    MonomialSum(int arity, std::vector<Term> terms) : r_(arity), terms_(std::move(terms)) {
        for (const auto& t : terms_)
            if (int(t.powers.size()) != r_) throw DimensionMismatch("monomials: power vector length != arity");
    }
    int arity() const override { return r_; }
    using MultiFunction<S>::partial;
    std::string kind() const override { return "monomials"; }
    const std::vector<Term>& terms() const { return terms_; }

    S partial(std::span<const int> q, std::span<const S> z) const override {
        this->check_args(q, z);
        S acc = ScalarTraits<S>::zero();
        for (const auto& t : terms_) {
            S v = t.coeff;
            bool zero = false;
            for (int j = 0; j < r_ && !zero; ++j) {
                const int a = t.powers[j];
                if (q[j] > a) {
                    zero = true;
                    break;
                }
                long ff = 1;
                for (int i = 0; i < q[j]; ++i) ff *= (a - i);
                v *= ScalarTraits<S>::from_int(ff);
                for (int i = 0; i < a - q[j]; ++i) v *= z[j];
            }
            if (!zero) acc += v;
        }
        return acc;
    }

private:
    int r_;
    std::vector<Term> terms_;
};

template <class S>
FunctionPtr<S> make_constant(int arity, const S& c) {
    return std::make_shared<MonomialSum<S>>(arity, std::vector<typename MonomialSum<S>::Term>{{c, std::vector<int>(arity, 0)}});
}

// lambda_j as an arity-r function (0-based j).
template <class S>
FunctionPtr<S> make_projection(int arity, int j) {
    std::vector<int> p(arity, 0);
    p[j] = 1;
    return std::make_shared<MonomialSum<S>>(arity, std::vector<typename MonomialSum<S>::Term>{{ScalarTraits<S>::one(), p}});
}

// Product of functions over disjoint variable groups; Leibniz partials factor.
template <class S>
class SeparableProduct final : public MultiFunction<S> {
public:
    struct Factor {
        FunctionPtr<S> fn;
        std::vector<int> vars;
    };
    SeparableProduct(int arity, std::vector<Factor> factors) : r_(arity), f_(std::move(factors)) {
        std::vector<int> used(r_, 0);
        for (const auto& f : f_) {
            if (int(f.vars.size()) != f.fn->arity()) throw DimensionMismatch("product: factor arity mismatch");
            for (int v : f.vars) {
                if (v < 0 || v >= r_) throw ValidationError("product: variable index out of range");
                ++used[v];
            }
        }
        for (int u : used)
            if (u > 1) throw ValidationError("product: variable groups must be disjoint");
    }
    int arity() const override { return r_; }
    using MultiFunction<S>::partial;
    std::string kind() const override { return "separable-product"; }
    const std::vector<Factor>& factors() const { return f_; }

    S partial(std::span<const int> q, std::span<const S> z) const override {
        this->check_args(q, z);
        std::vector<int> used(r_, 0);
        S acc = ScalarTraits<S>::one();
        for (const auto& f : f_) {
            std::vector<int> qq;
            std::vector<S> zz;
            for (int v : f.vars) {
                qq.push_back(q[v]);
                zz.push_back(z[v]);
                used[v] = 1;
            }
            acc *= f.fn->partial(qq, zz);
        }
        for (int v = 0; v < r_; ++v)
            if (!used[v] && q[v] > 0) return ScalarTraits<S>::zero();
        return acc;
    }

private:
    int r_;
    std::vector<Factor> f_;
};

// f(z_1..z_{2 zeta+1}) = beta(z_1, z_3, ...) * z_2 * z_4 * ...; the classical
// MOI rewritten as a multivariate matrix function.
template <class S>
class ProductMoiFunction final : public MultiFunction<S> {
public:
    ProductMoiFunction(FunctionPtr<S> beta, int zeta) : beta_(std::move(beta)), zeta_(zeta) {
        if (beta_->arity() != zeta + 1) throw DimensionMismatch("product-moi: beta arity must be zeta + 1");
    }
    int arity() const override { return 2 * zeta_ + 1; }
    using MultiFunction<S>::partial;
    std::string kind() const override { return "product-moi"; }
    const FunctionPtr<S>& beta() const { return beta_; }
    int zeta() const { return zeta_; }

    S partial(std::span<const int> q, std::span<const S> z) const override {
        this->check_args(q, z);
        std::vector<int> qb;
        std::vector<S> zb;
        S acc = ScalarTraits<S>::one();
        for (int j = 0; j < arity(); ++j) {
            if (j % 2 == 0) {
                qb.push_back(q[j]);
                zb.push_back(z[j]);
            } else if (q[j] == 0) {
                acc *= z[j];
            } else if (q[j] > 1) {
                return ScalarTraits<S>::zero();
            }
        }
        return acc * beta_->partial(qb, zb);
    }

private:
    FunctionPtr<S> beta_;
    int zeta_;
};

// Finite-difference weights (Fornberg) for the `deriv`-th derivative at 0.
template <class S>
std::vector<S> fd_weights(const std::vector<S>& x, int deriv) {
    using T = ScalarTraits<S>;
    const int m = int(x.size());
    std::vector<std::vector<S>> c(m, std::vector<S>(deriv + 1, T::zero()));
    S c1 = T::one(), c4 = x[0];
    c[0][0] = T::one();
    for (int i = 1; i < m; ++i) {
        const int mn = std::min(i, deriv);
        S c2 = T::one();
        const S c5 = c4;
        c4 = x[i];
        for (int j = 0; j < i; ++j) {
            const S c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (T::from_int(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - T::from_int(k) * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<S> w(m);
    for (int i = 0; i < m; ++i) w[i] = c[i][deriv];
    return w;
}

// Symmetric integer offsets -p..p with p = ceil(deriv/2), at least `min_width` points.
inline std::vector<int> central_offsets(int deriv, int min_width = 0) {
    int p = (deriv + 1) / 2;
    while (2 * p + 1 < min_width) ++p;
    std::vector<int> o;
    for (int k = -p; k <= p; ++k) o.push_back(k);
    return o;
}

// |analytic partial - tensor-product central finite difference of eval|.
template <class S>
double fd_check(const MultiFunction<S>& f, const std::vector<int>& orders, const std::vector<S>& nodes, double step) {
    using T = ScalarTraits<S>;
    const int r = f.arity();
    if (int(orders.size()) != r || int(nodes.size()) != r) throw DimensionMismatch("fd_check: argument count");
    std::vector<std::vector<int>> offs(r);
    std::vector<std::vector<S>> wts(r);
    for (int j = 0; j < r; ++j) {
        offs[j] = orders[j] == 0 ? std::vector<int>{0} : central_offsets(orders[j], orders[j] + 3);
        std::vector<S> x;
        for (int o : offs[j]) x.push_back(T::from_int(o));
        wts[j] = fd_weights(x, orders[j]);
    }
    S hpow = T::one();
    const S h = T::from_parts(step, 0.0);
    for (int j = 0; j < r; ++j)
        for (int k = 0; k < orders[j]; ++k) hpow *= h;
    std::vector<int> idx(r, 0);
    S acc = T::zero();
    while (true) {
        std::vector<S> z(nodes);
        S w = T::one();
        for (int j = 0; j < r; ++j) {
            z[j] += T::from_int(offs[j][idx[j]]) * h;
            w *= wts[j][idx[j]];
        }
        acc += w * f.eval(std::span<const S>(z));
        int j = 0;
        while (j < r && ++idx[j] == int(offs[j].size())) idx[j++] = 0;
        if (j == r) break;
    }
    return T::abs(f.partial(orders, nodes) - acc / hpow);
}

} // namespace gmoi
