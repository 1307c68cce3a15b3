#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"

namespace gmoi {

// Parameter symbols: X, its nilpotent part, the perturbed X~ = X + tY and its nilpotent part.
enum class Sym { X, XN, Xt, XtN };

inline std::string to_string(Sym s) {
    switch (s) {
    case Sym::X: return "X";
    case Sym::XN: return "X_N";
    case Sym::Xt: return "Xt";
    default: return "Xt_N";
    }
}

inline Sym tilde(Sym s) {
    if (s == Sym::X) return Sym::Xt;
    if (s == Sym::XN) return Sym::XtN;
    return s;
}

struct ExpansionTerm {
    long coeff = 0;
    bool correction = false;   // false: GMOI term, true: correction term of derivative order `order`
    std::vector<Sym> pattern;  // parameter list, length rho
    int order = 0;             // derivative order i of a correction term

    // GMOI symbol order: f^{[rho-1]}.
    int dd_order() const { return int(pattern.size()) - 1; }
    // Slot of C = X~ in a correction pattern (first perturbed symbol).
    int core() const {
        for (std::size_t i = 0; i < pattern.size(); ++i)
            if (pattern[i] == Sym::Xt || pattern[i] == Sym::XtN) return int(i);
        return -1;
    }
    std::string key() const {
        std::string k = correction ? "C" + std::to_string(order) + ":" : "T:";
        for (auto s : pattern) k += to_string(s) + ",";
        return k;
    }
};

struct DerivativeExpansion {
    int n = 0;
    std::vector<ExpansionTerm> terms;

    long coefficient(bool correction, const std::vector<Sym>& pattern, int order = 0) const {
        ExpansionTerm probe{0, correction, pattern, correction ? order : 0};
        for (const auto& t : terms)
            if (t.key() == probe.key()) return t.coeff;
        return 0;
    }
};

inline constexpr int kMaxExpansionOrder = 10;

namespace detail {

inline void accumulate(std::vector<ExpansionTerm>& out, std::map<std::string, std::size_t>& index, ExpansionTerm t) {
    const auto k = t.key();
    auto it = index.find(k);
    if (it == index.end()) {
        index.emplace(k, out.size());
        out.push_back(std::move(t));
    } else {
        out[it->second].coeff += t.coeff;
    }
}

} // namespace detail

// Term-by-term differentiation starting from T_{f^{[1]}}^{X,X}(Y):
//  - a GMOI with at least one X: at each X position, X -> (X, X) with +c,
//    X -> (X_N, X_N) with -c, and a correction term (prefix, X~, X, tilde(suffix)) with -c;
//  - a GMOI whose parameters are all X_N differentiates to zero;
//  - a correction term of order i becomes order i + 1.
inline DerivativeExpansion build_expansion(int n) {
    if (n < 1) throw ValidationError("derivative order must be at least 1");
    if (n > kMaxExpansionOrder) throw UnsupportedOrder("derivative order exceeds the expansion budget");
    std::vector<ExpansionTerm> cur{{1, false, {Sym::X, Sym::X}, 0}};
    for (int step = 1; step < n; ++step) {
        std::vector<ExpansionTerm> next;
        std::map<std::string, std::size_t> index;
        for (const auto& t : cur) {
            if (t.correction) {
                detail::accumulate(next, index, {t.coeff, true, t.pattern, t.order + 1});
                continue;
            }
            for (std::size_t th = 0; th < t.pattern.size(); ++th) {
                if (t.pattern[th] != Sym::X) continue;
                std::vector<Sym> pre(t.pattern.begin(), t.pattern.begin() + th);
                std::vector<Sym> post(t.pattern.begin() + th + 1, t.pattern.end());
                auto make = [&](Sym a, Sym b, bool tail_tilde) {
                    std::vector<Sym> p = pre;
                    p.push_back(a);
                    p.push_back(b);
                    for (auto s : post) p.push_back(tail_tilde ? tilde(s) : s);
                    return p;
                };
                detail::accumulate(next, index, {t.coeff, false, make(Sym::X, Sym::X, false), 0});
                detail::accumulate(next, index, {-t.coeff, false, make(Sym::XN, Sym::XN, false), 0});
                detail::accumulate(next, index, {-t.coeff, true, make(Sym::Xt, Sym::X, true), 1});
            }
        }
        cur.clear();
        for (auto& t : next)
            if (t.coeff != 0) cur.push_back(std::move(t));
    }
    return {n, cur};
}

inline long gamma(int rho) {
    if (rho < 4) throw ValidationError("gamma is defined for rho >= 4");
    long total = 0;
    for (int k = 1; rho - 2 * k - 1 >= 0; ++k) {
        // (rho-k-1)! / (k! (rho-2k-1)!) as a binomial C(rho-k-1, k).
        long b = 1;
        for (int i = 1; i <= k; ++i) b = b * (rho - 2 * k - 1 + i) / i;
        total += b * (rho - 2 * k - 1);
    }
    return total;
}

// Number of distinct correction patterns of length rho containing a nilpotent symbol.
inline long correction_pattern_count(const DerivativeExpansion& e, int rho) {
    long c = 0;
    for (const auto& t : e.terms) {
        if (!t.correction || int(t.pattern.size()) != rho) continue;
        if (std::any_of(t.pattern.begin(), t.pattern.end(), [](Sym s) { return s == Sym::XN || s == Sym::XtN; })) ++c;
    }
    return c;
}

// Mixed GMOI patterns (some X and some X_N) in an expansion.
inline long mixed_gmoi_count(const DerivativeExpansion& e) {
    long c = 0;
    for (const auto& t : e.terms) {
        if (t.correction) continue;
        const bool hx = std::count(t.pattern.begin(), t.pattern.end(), Sym::X) > 0;
        const bool hn = std::count(t.pattern.begin(), t.pattern.end(), Sym::XN) > 0;
        if (hx && hn) ++c;
    }
    return c;
}

// d/dt f(X + tY) at 0 as T_{f^{[1]}}^{X,X}(Y).
template <class S>
Matrix<S> first_derivative(const UnivariatePtr<S>& f, const JordanDecomposition<S>& x, const Matrix<S>& y,
                           std::size_t budget = default_budget()) {
    GmoiProblem<S> p{lift_divided_difference(f, 1), {x, x}, {y}, budget};
    return eval_gmoi(p);
}

template <class S>
using FamilyProvider = std::function<JordanDecomposition<S>(const S& t)>;

struct DerivativeOptions {
    double xStep = 1e-3;
    bool richardson = true;
    std::size_t budget = default_budget();
};

namespace detail {

template <class S>
S step_scalar(double h) {
    if constexpr (is_exact_v<S>) {
        auto q = rationalize(h, 1000000000L, 0.0);
        if (!q) q = mpq_class(h);
        return QComplex(*q);
    } else {
        return S(h, 0.0);
    }
}

// i-th derivative at 0 of t -> g(t) from a central Fornberg stencil.
template <class S>
Matrix<S> central_derivative(const std::function<Matrix<S>(const S&)>& g, int order, const S& h) {
    using T = ScalarTraits<S>;
    const auto offs = central_offsets(order);
    std::vector<S> x;
    for (int o : offs) x.push_back(T::from_int(o));
    const auto w = fd_weights(x, order);
    Matrix<S> acc;
    for (std::size_t k = 0; k < offs.size(); ++k) {
        if (T::is_zero(w[k], 0.0)) continue;
        const Matrix<S> v = g(T::from_int(offs[k]) * h) * w[k];
        acc = acc.dim() == 0 ? v : acc + v;
    }
    S hp = T::one();
    for (int i = 0; i < order; ++i) hp *= h;
    return acc * (T::one() / hp);
}

} // namespace detail

// Evaluates one expansion term at the family data.
template <class S>
Matrix<S> eval_expansion_term(const ExpansionTerm& term, const UnivariatePtr<S>& f, const JordanDecomposition<S>& x0,
                              const FamilyProvider<S>& family, const Matrix<S>& y, const DerivativeOptions& opt) {
    using T = ScalarTraits<S>;
    const int rho = int(term.pattern.size());
    if (!term.correction) {
        std::vector<ChainElement<S>> elems;
        for (auto s : term.pattern) elems.push_back(slot_items(x0, s == Sym::XN ? SlotMode::N : SlotMode::Full));
        std::vector<const Matrix<S>*> args(rho - 1, &y);
        const auto lifted = lift_divided_difference(f, rho - 1);
        return chain_sum(elems, args, partial_coefficient(*lifted), opt.budget);
    }
    // Correction term: derivative of the assembled correction sum with C = X~, D = X.
    const int core = term.core();
    std::vector<Sym> others;
    for (int i = 0; i < rho; ++i)
        if (i != core && i != core + 1) others.push_back(term.pattern[i]);
    const std::vector<Matrix<S>> ys(rho - 2, y);
    std::map<std::string, JordanDecomposition<S>> cache;
    auto at = [&](const S& t) -> const JordanDecomposition<S>& {
        std::ostringstream key;
        key << t;
        auto it = cache.find(key.str());
        if (it == cache.end()) it = cache.emplace(key.str(), family(t)).first;
        return it->second;
    };
    std::function<Matrix<S>(const S&)> xbar = [&](const S& t) {
        const auto& xt = at(t);
        if (structure_signature(xt) != structure_signature(x0))
            throw StructureInstability("Jordan structure of X + tY changes inside the difference stencil");
        std::vector<JordanDecomposition<S>> xs;
        std::vector<SlotMode> modes;
        for (auto s : others) {
            xs.push_back(s == Sym::Xt || s == Sym::XtN ? xt : x0);
            modes.push_back(s == Sym::XN || s == Sym::XtN ? SlotMode::N : SlotMode::Full);
        }
        return perturbation_check(f, core + 1, xs, xt, x0, ys, opt.budget, modes).xbar;
    };
    const S h = detail::step_scalar<S>(opt.xStep);
    Matrix<S> d1 = detail::central_derivative(xbar, term.order, h);
    if (!opt.richardson) return d1;
    const S h2 = h * T::from_ratio(1, 2);
    Matrix<S> d2 = detail::central_derivative(xbar, term.order, h2);
    return (d2 * T::from_int(4) - d1) * T::from_ratio(1, 3);
}

// n-th derivative of f(X + tY) at 0 from the expansion; correction terms are
// differentiated numerically along `family` (t -> decomposition of X + tY).
template <class S>
Matrix<S> nth_derivative(const UnivariatePtr<S>& f, const JordanDecomposition<S>& x, const Matrix<S>& y, int n,
                         const FamilyProvider<S>& family, const DerivativeOptions& opt = {}) {
    const auto e = build_expansion(n);
    Matrix<S> out(x.dim);
    for (const auto& t : e.terms) {
        if (t.coeff == 0) continue;
        out += eval_expansion_term(t, f, x, family, y, opt) * ScalarTraits<S>::from_int(t.coeff);
    }
    return out;
}

// Family from automatic decomposition of X + tY.
template <class S>
FamilyProvider<S> auto_family(const Matrix<S>& x, const Matrix<S>& y, double tol) {
    return [x, y, tol](const S& t) { return decompose_auto(Matrix<S>(x + t * y), tol); };
}

template <class S>
Matrix<S> nth_derivative(const UnivariatePtr<S>& f, const Matrix<S>& x, const Matrix<S>& y, int n, double tol,
                         const DerivativeOptions& opt = {}) {
    return nth_derivative(f, decompose_auto(x, tol), y, n, auto_family(x, y, tol), opt);
}

// Central finite difference of t -> f(X + tY) at 0 with `width` points.
template <class S>
Matrix<S> fd_oracle(const UnivariateFunction<S>& f, const Matrix<S>& x, const Matrix<S>& y, int n, double step,
                    int width) {
    using T = ScalarTraits<S>;
    if (width < n + 1) throw ValidationError("stencil width must be at least n + 1");
    if (width % 2 == 0) ++width;
    const int p = width / 2;
    std::vector<S> nodes;
    for (int k = -p; k <= p; ++k) nodes.push_back(T::from_int(k));
    const auto w = fd_weights(nodes, n);
    const S h = detail::step_scalar<S>(step);
    Matrix<S> acc(x.dim());
    for (int k = -p; k <= p; ++k) {
        if (T::is_zero(w[k + p], 0.0)) continue;
        acc += f.apply(Matrix<S>(x + (T::from_int(k) * h) * y)) * w[k + p];
    }
    S hp = T::one();
    for (int i = 0; i < n; ++i) hp *= h;
    return acc * (T::one() / hp);
}

} // namespace gmoi
