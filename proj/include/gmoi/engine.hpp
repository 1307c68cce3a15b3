#pragma once

#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "functions.hpp"
#include "jordan.hpp"

namespace gmoi {

inline constexpr std::size_t kDefaultBudget = 10'000'000;

// Term budget: GMOI_BUDGET overrides the default.
inline std::size_t default_budget() {
    if (const char* env = std::getenv("GMOI_BUDGET")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return std::size_t(v);
    }
    return kDefaultBudget;
}

// One factor choice in a chain element: a matrix, the symbol variables it
// contributes, their derivative orders, and a scalar weight.
template <class S>
struct ChainItem {
    Matrix<S> z;
    std::vector<S> lambdas;
    std::vector<int> orders;
    S scale;
};

template <class S>
using ChainElement = std::vector<ChainItem<S>>;

// Coefficient of a leaf from the concatenated variables and orders.
template <class S>
using ChainCoefficient = std::function<S(const std::vector<S>&, const std::vector<int>&)>;

template <class S>
ChainCoefficient<S> partial_coefficient(const MultiFunction<S>& f) {
    return [&f](const std::vector<S>& lam, const std::vector<int>& q) {
        return f.partial(std::span<const int>(q), std::span<const S>(lam));
    };
}

inline std::size_t leaf_count(const std::vector<std::size_t>& sizes) {
    std::size_t total = 1;
    for (auto s : sizes) {
        if (s == 0) return 0;
        if (total > std::numeric_limits<std::size_t>::max() / s) return std::numeric_limits<std::size_t>::max();
        total *= s;
    }
    return total;
}

// Sum over all item tuples of coef * Z_0 A_0 Z_1 A_1 ... Z_L, depth first with
// prefix products. A null argument stands for the identity.
template <class S>
Matrix<S> chain_sum(const std::vector<ChainElement<S>>& elems, const std::vector<const Matrix<S>*>& args,
                    const ChainCoefficient<S>& coef, std::size_t budget) {
    using T = ScalarTraits<S>;
    if (elems.empty()) throw ValidationError("empty chain");
    if (args.size() + 1 != elems.size()) throw DimensionMismatch("chain needs one argument between consecutive elements");
    int n = -1;
    for (const auto* a : args)
        if (a) n = a->dim();
    std::vector<std::size_t> sizes;
    for (const auto& e : elems) {
        sizes.push_back(e.size());
        for (const auto& it : e) {
            if (n < 0) n = it.z.dim();
            if (it.z.dim() != n) throw DimensionMismatch("chain item dimensions differ");
        }
    }
    const std::size_t leaves = leaf_count(sizes);
    if (leaves > budget) throw BudgetExceeded(leaves, budget);
    if (n < 0) throw ValidationError("chain dimension cannot be inferred");
    if (leaves == 0) return Matrix<S>(n);

    Matrix<S> out(n);
    std::vector<S> lam;
    std::vector<int> ord;
    const int depth = int(elems.size());
    std::function<void(int, const Matrix<S>&, const S&)> rec = [&](int k, const Matrix<S>& prefix, const S& w) {
        for (const auto& it : elems[k]) {
            Matrix<S> m = k == 0 ? it.z : prefix * it.z;
            if (k + 1 < depth && args[k]) m = m * *args[k];
            if (is_zero_matrix(m, 0.0)) continue;
            const std::size_t ls = lam.size(), os = ord.size();
            lam.insert(lam.end(), it.lambdas.begin(), it.lambdas.end());
            ord.insert(ord.end(), it.orders.begin(), it.orders.end());
            const S wk = w * it.scale;
            if (k + 1 == depth) {
                const S c = coef(lam, ord) * wk;
                if (!T::is_zero(c, 0.0)) out += c * m;
            } else {
                rec(k + 1, m, wk);
            }
            lam.resize(ls);
            ord.resize(os);
        }
    };
    rec(0, Matrix<S>(n), T::one());
    return out;
}

// Which spectral factors a parameter slot contributes.
enum class SlotMode { Full, P, N };

inline const char* to_string(SlotMode m) {
    switch (m) {
    case SlotMode::P: return "P";
    case SlotMode::N: return "N";
    default: return "Full";
    }
}

// P_{k,i} (order 0) and N_{k,i}^q / q! (order q, 1 <= q < m) per block.
template <class S>
ChainElement<S> slot_items(const JordanDecomposition<S>& d, SlotMode mode) {
    ChainElement<S> e;
    for (const auto& b : d.blocks) {
        if (mode != SlotMode::N) e.push_back({b.projector, {b.eigenvalue}, {0}, ScalarTraits<S>::one()});
        if (mode != SlotMode::P)
            for (int q = 1; q < b.order; ++q)
                e.push_back({b.powers[q], {b.eigenvalue}, {q}, ScalarTraits<S>::one() / factorial<S>(q)});
    }
    return e;
}

template <class S>
struct GmoiProblem {
    FunctionPtr<S> beta;
    std::vector<JordanDecomposition<S>> params;
    std::vector<Matrix<S>> args;
    std::size_t budget = default_budget();

    int zeta() const { return int(args.size()); }
    int dim() const { return params.empty() ? 0 : params[0].dim; }
    void check() const {
        if (!beta) throw ValidationError("missing symbol");
        if (args.empty()) throw ValidationError("a GMOI needs at least one argument matrix");
        if (int(params.size()) != zeta() + 1) throw DimensionMismatch("need zeta + 1 parameter matrices");
        if (beta->arity() != zeta() + 1) throw DimensionMismatch("symbol arity must be zeta + 1");
        for (const auto& p : params)
            if (p.dim != dim()) throw DimensionMismatch("parameter dimensions differ");
        for (const auto& a : args)
            if (a.dim() != dim()) throw DimensionMismatch("argument dimensions differ");
    }
};

// GMOI with every slot restricted to the given mode.
template <class S>
Matrix<S> eval_gmoi_modes(const GmoiProblem<S>& pr, const std::vector<SlotMode>& modes) {
    pr.check();
    if (int(modes.size()) != pr.zeta() + 1) throw DimensionMismatch("one slot mode per parameter");
    std::vector<ChainElement<S>> elems;
    for (int j = 0; j <= pr.zeta(); ++j) elems.push_back(slot_items(pr.params[j], modes[j]));
    std::vector<const Matrix<S>*> args;
    for (const auto& a : pr.args) args.push_back(&a);
    return chain_sum(elems, args, partial_coefficient(*pr.beta), pr.budget);
}

template <class S>
Matrix<S> eval_gmoi(const GmoiProblem<S>& pr) {
    return eval_gmoi_modes(pr, std::vector<SlotMode>(pr.zeta() + 1, SlotMode::Full));
}

// Classical MOI: every parameter must be diagonalizable.
template <class S>
Matrix<S> eval_classical_moi(const GmoiProblem<S>& pr) {
    pr.check();
    for (const auto& p : pr.params)
        if (!p.diagonalizable()) throw ValidationError("classical MOI needs parameters with zero nilpotent part");
    return eval_gmoi_modes(pr, std::vector<SlotMode>(pr.zeta() + 1, SlotMode::P));
}

struct NilpotentPattern {
    int index = 0;
    int width = 0;
    std::vector<int> bits;      // bits[j-1] is slot j; slot 1 is the leftmost bit
    std::vector<int> selected;  // 1-based slots carrying a nilpotent exponent

    std::vector<SlotMode> modes() const {
        std::vector<SlotMode> m;
        for (int b : bits) m.push_back(b ? SlotMode::N : SlotMode::P);
        return m;
    }
};

inline NilpotentPattern binary_selector(int index, int width) {
    if (width < 1 || width > 30 || index < 0 || index >= (1 << width))
        throw ValidationError("pattern index out of range");
    NilpotentPattern p;
    p.index = index;
    p.width = width;
    for (int j = 1; j <= width; ++j) {
        const int bit = (index >> (width - j)) & 1;
        p.bits.push_back(bit);
        if (bit) p.selected.push_back(j);
    }
    return p;
}

template <class S>
struct PatternTerm {
    NilpotentPattern pattern;
    Matrix<S> value;
};

// A_{i'} for i' = 0 .. 2^{zeta+1} - 1; A_0 is the projector term.
template <class S>
std::vector<PatternTerm<S>> pattern_terms(const GmoiProblem<S>& pr) {
    pr.check();
    const int w = pr.zeta() + 1;
    std::vector<PatternTerm<S>> out;
    for (int i = 0; i < (1 << w); ++i) {
        auto p = binary_selector(i, w);
        out.push_back({p, eval_gmoi_modes(pr, p.modes())});
    }
    return out;
}

template <class S>
struct ParameterSplit {
    int index = 1;  // 1-based; slot j uses X_{j,N} iff floor((index-1)/2^{j-1}) mod 2 = 1
    std::vector<SlotMode> modes;
    Matrix<S> value;
};

template <class S>
std::vector<ParameterSplit<S>> decompose_by_parameters(const GmoiProblem<S>& pr) {
    pr.check();
    const int w = pr.zeta() + 1;
    std::vector<ParameterSplit<S>> out;
    for (int i = 1; i <= (1 << w); ++i) {
        ParameterSplit<S> s;
        s.index = i;
        for (int j = 1; j <= w; ++j) s.modes.push_back((((i - 1) >> (j - 1)) & 1) ? SlotMode::N : SlotMode::P);
        s.value = eval_gmoi_modes(pr, s.modes);
        out.push_back(std::move(s));
    }
    return out;
}

template <class S>
struct CompositionResult {
    Matrix<S> lhs;
    Matrix<S> rhs;
    double residual = 0;
};

// Composite GMOI with (zeta+1)^2 parameters X_1, [X], X_2, [X], ..., [X], X_{zeta+1}
// and arguments (I, [Y], I) per group, against T_f(T_{beta_1}(Y), ..., T_{beta_zeta}(Y)).
template <class S>
CompositionResult<S> compose_check(const FunctionPtr<S>& f, const std::vector<FunctionPtr<S>>& betas,
                                   const std::vector<JordanDecomposition<S>>& params,
                                   const std::vector<Matrix<S>>& args, std::size_t budget = default_budget()) {
    const int zeta = int(args.size());
    if (int(betas.size()) != zeta) throw DimensionMismatch("need one inner symbol per argument");
    if (int(params.size()) != zeta + 1) throw DimensionMismatch("need zeta + 1 parameter matrices");
    const int n = params[0].dim;

    std::vector<Matrix<S>> inner;
    for (int i = 0; i < zeta; ++i) inner.push_back(eval_gmoi(GmoiProblem<S>{betas[i], params, args, budget}));
    CompositionResult<S> r;
    r.rhs = eval_gmoi(GmoiProblem<S>{f, params, inner, budget});

    const int stride = zeta + 2;
    const int arity = (zeta + 1) * (zeta + 1);
    std::vector<typename SeparableProduct<S>::Factor> factors;
    std::vector<int> outer;
    for (int p = 0; p <= zeta; ++p) outer.push_back(p * stride);
    factors.push_back({f, outer});
    for (int i = 0; i < zeta; ++i) {
        std::vector<int> g;
        for (int p = 0; p <= zeta; ++p) g.push_back(i * stride + 1 + p);
        factors.push_back({betas[i], g});
    }
    GmoiProblem<S> lhs;
    lhs.beta = std::make_shared<SeparableProduct<S>>(arity, factors);
    lhs.budget = budget;
    const Matrix<S> id = Matrix<S>::identity(n);
    for (int p = 0; p <= zeta; ++p) {
        lhs.params.push_back(params[p]);
        if (p == zeta) break;
        lhs.args.push_back(id);
        for (int q = 0; q <= zeta; ++q) {
            lhs.params.push_back(params[q]);
            if (q < zeta) lhs.args.push_back(args[q]);
        }
        lhs.args.push_back(id);
    }
    r.lhs = eval_gmoi(lhs);
    r.residual = frobenius_norm(r.lhs - r.rhs);
    return r;
}

} // namespace gmoi
