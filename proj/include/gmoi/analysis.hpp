#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"
#include "spectral_map.hpp"

namespace gmoi {

// max(0, largest - sum of the rest).
inline double reverse_triangle_lower(std::vector<double> norms) {
    if (norms.empty()) return 0.0;
    std::sort(norms.begin(), norms.end(), std::greater<>());
    double rest = 0;
    for (std::size_t i = 1; i < norms.size(); ++i) rest += norms[i];
    return std::max(0.0, norms[0] - rest);
}

struct NormBoundReport {
    double norm = 0;  // ||T||_F
    std::vector<double> perPatternNorms;
    std::vector<double> perPatternUpper;
    double upperBound = 0;
    double sortedLower = 0;
    double minBeta = 0;
    bool conditionHolds = false;
    std::optional<double> minBetaLower;
};

namespace detail {

// max |partial(q, lambda)| / prod q! over all tuples of distinct eigenvalues.
template <class S>
double max_partial_over_spectra(const MultiFunction<S>& beta, const std::vector<JordanDecomposition<S>>& params,
                                const std::vector<int>& q) {
    const int w = int(params.size());
    std::vector<int> k(w, 0), kb(w), lows(w, 0);
    for (int j = 0; j < w; ++j) kb[j] = params[j].distinct_count();
    double denom = 1;
    for (int v : q) denom *= double(factorial_int(v));
    double best = 0;
    do {
        std::vector<S> lam(w);
        for (int j = 0; j < w; ++j) lam[j] = params[j].eigenvalues[k[j]];
        best = std::max(best, ScalarTraits<S>::abs(beta.partial(std::span<const int>(q), std::span<const S>(lam))));
    } while (detail::advance(k, kb, lows));
    return best / denom;
}

template <class S>
double min_abs_over_spectra(const MultiFunction<S>& beta, const std::vector<JordanDecomposition<S>>& params) {
    const int w = int(params.size());
    std::vector<int> k(w, 0), kb(w), lows(w, 0);
    for (int j = 0; j < w; ++j) kb[j] = params[j].distinct_count();
    double best = std::numeric_limits<double>::infinity();
    do {
        std::vector<S> lam(w);
        for (int j = 0; j < w; ++j) lam[j] = params[j].eigenvalues[k[j]];
        best = std::min(best, ScalarTraits<S>::abs(beta.eval(std::span<const S>(lam))));
    } while (detail::advance(k, kb, lows));
    return best;
}

} // namespace detail

// Upper estimate of ||A_{i'}||_F: for every choice of (block, q) in the
// selected slots, max|beta^{(q)}/q!| over the spectra times prod ||N^q|| ||Y||
// over selected slots and prod ||Y|| over the others. Y_{zeta+1} = I adds no factor.
template <class S>
double pattern_upper(const GmoiProblem<S>& pr, const NilpotentPattern& pat, std::map<std::vector<int>, double>& cache) {
    const int w = pr.zeta() + 1;
    std::vector<double> ynorm(w, 1.0);
    for (int j = 0; j < pr.zeta(); ++j) ynorm[j] = frobenius_norm(pr.args[j]);

    // Per selected slot: list of (q, ||N^q||).
    std::vector<std::vector<std::pair<int, double>>> choices;
    std::vector<std::size_t> sizes;
    for (int slot : pat.selected) {
        std::vector<std::pair<int, double>> c;
        for (const auto& b : pr.params[slot - 1].blocks)
            for (int q = 1; q < b.order; ++q) c.push_back({q, frobenius_norm(b.powers[q])});
        sizes.push_back(c.size());
        choices.push_back(std::move(c));
    }
    const std::size_t leaves = leaf_count(sizes);
    if (leaves > pr.budget) throw BudgetExceeded(leaves, pr.budget);
    if (leaves == 0) return 0.0;

    double unsel = 1.0;
    for (int j = 0; j < w; ++j)
        if (!pat.bits[j]) unsel *= ynorm[j];

    double total = 0;
    std::vector<int> idx(choices.size(), 0);
    while (true) {
        std::vector<int> q(w, 0);
        double prod = unsel;
        for (std::size_t s = 0; s < choices.size(); ++s) {
            const int slot = pat.selected[s] - 1;
            q[slot] = choices[s][idx[s]].first;
            prod *= choices[s][idx[s]].second * ynorm[slot];
        }
        auto it = cache.find(q);
        if (it == cache.end()) it = cache.emplace(q, detail::max_partial_over_spectra(*pr.beta, pr.params, q)).first;
        total += it->second * prod;
        std::size_t s = 0;
        while (s < idx.size() && ++idx[s] == int(choices[s].size())) idx[s++] = 0;
        if (s == idx.size()) break;
    }
    return total;
}

template <class S>
NormBoundReport norm_bounds(const GmoiProblem<S>& pr) {
    NormBoundReport r;
    const auto terms = pattern_terms(pr);
    Matrix<S> t(pr.dim());
    std::map<std::vector<int>, double> cache;
    for (const auto& term : terms) {
        t += term.value;
        r.perPatternNorms.push_back(frobenius_norm(term.value));
        r.perPatternUpper.push_back(pattern_upper(pr, term.pattern, cache));
        r.upperBound += r.perPatternUpper.back();
    }
    r.norm = frobenius_norm(t);
    r.sortedLower = reverse_triangle_lower(r.perPatternNorms);

    Matrix<S> ys = pr.args[0];
    for (int j = 1; j < pr.zeta(); ++j) ys = ys * pr.args[j];
    r.minBeta = detail::min_abs_over_spectra(*pr.beta, pr.params);
    double rest = 0;
    for (std::size_t i = 1; i < r.perPatternNorms.size(); ++i) rest += r.perPatternNorms[i];
    const double lead = r.minBeta * frobenius_norm(ys);
    r.conditionHolds = lead >= rest;
    if (r.conditionHolds) r.minBetaLower = lead - rest;
    return r;
}

template <class S>
NormBoundReport upper_bound(const GmoiProblem<S>& pr) {
    return norm_bounds(pr);
}

template <class S>
NormBoundReport lower_bound(const GmoiProblem<S>& pr) {
    return norm_bounds(pr);
}

struct LipschitzReport {
    double actual = 0;
    double bound = 0;
    std::vector<double> upsilon;  // scalar factor per telescoped term
    std::vector<double> termBounds;
};

// T(Y) - T(Y') telescoped as sum_i T(Y'_1..Y'_{i-1}, Y_i - Y'_i, Y_{i+1}..Y_zeta),
// each term bounded by the pattern upper bound.
template <class S>
LipschitzReport lipschitz_check(const GmoiProblem<S>& pr, const std::vector<Matrix<S>>& y,
                                const std::vector<Matrix<S>>& yp) {
    const int zeta = pr.zeta();
    if (int(y.size()) != zeta || int(yp.size()) != zeta) throw DimensionMismatch("argument lists must have zeta entries");
    LipschitzReport r;
    GmoiProblem<S> a = pr, b = pr;
    a.args = y;
    b.args = yp;
    r.actual = frobenius_norm(eval_gmoi(a) - eval_gmoi(b));
    for (int i = 0; i < zeta; ++i) {
        GmoiProblem<S> p = pr;
        double scale = 1;
        for (int j = 0; j < zeta; ++j) {
            p.args[j] = j < i ? yp[j] : (j == i ? y[j] - yp[j] : y[j]);
            scale *= frobenius_norm(p.args[j]);
        }
        const double ub = norm_bounds(p).upperBound;
        r.termBounds.push_back(ub);
        r.upsilon.push_back(scale > 0 ? ub / scale : 0.0);
        r.bound += ub;
    }
    return r;
}

template <class S>
struct NamedMatrix {
    std::string name;
    Matrix<S> value;
};

template <class S>
struct PerturbationReport {
    Matrix<S> lhs;
    Matrix<S> rhsMain;  // T^{..C..} - T^{..D..}
    Matrix<S> xbar;     // sum of the correction terms
    Matrix<S> rhs;
    Matrix<S> impliedCorrection;  // lhs - rhsMain - trailing
    std::vector<NamedMatrix<S>> corrections;
    std::vector<NamedMatrix<S>> groups;
    std::vector<NamedMatrix<S>> trailing;
    double residual = 0;
    double maxCorrectionNorm = 0;
};

namespace detail {

inline std::vector<SlotMode> flank_modes(bool present) {
    return present ? std::vector<SlotMode>{SlotMode::P, SlotMode::N} : std::vector<SlotMode>{SlotMode::Full};
}

inline std::string mode_suffix(SlotMode m) { return m == SlotMode::Full ? "" : (m == SlotMode::P ? "_P" : "_N"); }

inline const char* roman(int i) {
    static const char* r[] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
    return r[i];
}

// Core items of a correction term. Mode P: P_c (N_c^qc - N_d^qd) P_d with
// orders (0, 0). Mode N: the two beta^{[zeta+1]} families (0, qd) and (qc, 0).
template <class S>
ChainElement<S> core_items_long(const JordanDecomposition<S>& c, const JordanDecomposition<S>& d, SlotMode core) {
    using T = ScalarTraits<S>;
    ChainElement<S> e;
    for (const auto& bc : c.blocks)
        for (int qc = 1; qc < bc.order; ++qc)
            for (const auto& bd : d.blocks)
                for (int qd = 1; qd < bd.order; ++qd) {
                    const Matrix<S> diff = bc.powers[qc] - bd.powers[qd];
                    if (core == SlotMode::P) {
                        e.push_back({bc.projector * diff * bd.projector, {bc.eigenvalue, bd.eigenvalue}, {0, 0}, T::one()});
                    } else {
                        e.push_back({bc.projector * diff * bd.powers[qd], {bc.eigenvalue, bd.eigenvalue}, {0, qd},
                                     T::one() / factorial<S>(qd)});
                        e.push_back({bc.powers[qc] * diff * bd.projector, {bc.eigenvalue, bd.eigenvalue}, {qc, 0},
                                     T::one() / factorial<S>(qc)});
                    }
                }
    return e;
}

// The merged-variable beta^{[zeta]} families of mode N: +P_c N_d^qd at lambda_c
// and -N_c^qc P_d at lambda_d.
template <class S>
ChainElement<S> core_items_short(const JordanDecomposition<S>& c, const JordanDecomposition<S>& d) {
    using T = ScalarTraits<S>;
    ChainElement<S> e;
    for (const auto& bc : c.blocks)
        for (const auto& bd : d.blocks)
            for (int qd = 1; qd < bd.order; ++qd)
                e.push_back({bc.projector * bd.powers[qd], {bc.eigenvalue}, {qd}, T::one() / factorial<S>(qd)});
    for (const auto& bc : c.blocks)
        for (int qc = 1; qc < bc.order; ++qc)
            for (const auto& bd : d.blocks)
                e.push_back({bc.powers[qc] * bd.projector, {bd.eigenvalue}, {qc}, -(T::one() / factorial<S>(qc))});
    return e;
}

} // namespace detail

// Perturbation formula for C, D inserted at slot j (1-based, 1 <= j <= zeta+1)
// among the parameters X_1..X_zeta with arguments Y_1..Y_zeta. `xmodes`
// optionally restricts each X_i to its projector or nilpotent part.
// LHS = T_{f^{[zeta+1]}}^{X_1..X_{j-1}, C, D, X_j..X_zeta}(Y_1..Y_{j-1}, C-D, Y_j..Y_zeta).
template <class S>
PerturbationReport<S> perturbation_check(const UnivariatePtr<S>& f, int j, const std::vector<JordanDecomposition<S>>& xs,
                                         const JordanDecomposition<S>& c, const JordanDecomposition<S>& d,
                                         const std::vector<Matrix<S>>& ys, std::size_t budget = default_budget(),
                                         const std::vector<SlotMode>& xmodes = {}) {
    const int zeta = int(ys.size());
    if (zeta < 1) throw ValidationError("need at least one argument matrix");
    if (int(xs.size()) != zeta) throw DimensionMismatch("need zeta parameter matrices X_1..X_zeta");
    if (j < 1 || j > zeta + 1) throw ValidationError("unsupported slot index " + std::to_string(j));
    if (!xmodes.empty() && int(xmodes.size()) != zeta) throw DimensionMismatch("one slot mode per parameter matrix");
    const int n = c.dim;
    if (d.dim != n) throw DimensionMismatch("C and D dimensions differ");
    for (const auto& x : xs)
        if (x.dim != n) throw DimensionMismatch("parameter dimensions differ");
    for (const auto& y : ys)
        if (y.dim() != n) throw DimensionMismatch("argument dimensions differ");

    const auto big = lift_divided_difference(f, zeta + 1);
    const auto small = lift_divided_difference(f, zeta);
    const auto big_coef = partial_coefficient(*big), small_coef = partial_coefficient(*small);
    const Matrix<S> cd = reconstruct(c) - reconstruct(d);
    const int np = j - 1;  // prefix X_1..X_{j-1}
    const bool has_prefix = np > 0, has_suffix = j <= zeta;

    std::vector<const Matrix<S>*> args_short;
    for (const auto& y : ys) args_short.push_back(&y);
    std::vector<const Matrix<S>*> args_long;
    for (int i = 0; i < np; ++i) args_long.push_back(&ys[i]);
    args_long.push_back(&cd);
    for (int i = np; i < zeta; ++i) args_long.push_back(&ys[i]);

    // Elements around the core with the two flanks restricted.
    auto frame = [&](SlotMode left, SlotMode right, std::vector<ChainElement<S>> core) {
        std::vector<ChainElement<S>> el;
        auto slot = [&](int i, SlotMode flank) {
            const SlotMode own = xmodes.empty() ? SlotMode::Full : xmodes[i];
            if (own != SlotMode::Full && flank != SlotMode::Full && own != flank) return ChainElement<S>{};
            return slot_items(xs[i], own == SlotMode::Full ? flank : own);
        };
        for (int i = 0; i < np; ++i) el.push_back(slot(i, i == np - 1 ? left : SlotMode::Full));
        for (auto& e : core) el.push_back(std::move(e));
        for (int i = np; i < zeta; ++i) el.push_back(slot(i, i == np ? right : SlotMode::Full));
        return el;
    };

    PerturbationReport<S> r;
    r.lhs = chain_sum(frame(SlotMode::Full, SlotMode::Full,
                            {slot_items(c, SlotMode::Full), slot_items(d, SlotMode::Full)}),
                      args_long, big_coef, budget);
    const Matrix<S> tc = chain_sum(frame(SlotMode::Full, SlotMode::Full, {slot_items(c, SlotMode::Full)}),
                                   args_short, small_coef, budget);
    const Matrix<S> td = chain_sum(frame(SlotMode::Full, SlotMode::Full, {slot_items(d, SlotMode::Full)}),
                                   args_short, small_coef, budget);
    r.rhsMain = tc - td;
    r.xbar = Matrix<S>(n);
    Matrix<S> trailing(n);

    const std::string lname = has_prefix ? "X" + std::to_string(j - 1) : "";
    const std::string rname = has_suffix ? "X" + std::to_string(j) : "";
    for (SlotMode left : detail::flank_modes(has_prefix))
        for (SlotMode right : detail::flank_modes(has_suffix))
            for (SlotMode core : {SlotMode::P, SlotMode::N}) {
                std::string label;
                if (has_prefix) label += lname + detail::mode_suffix(left) + ",";
                label += "C" + detail::mode_suffix(core) + ",D" + detail::mode_suffix(core);
                if (has_suffix) label += "," + rname + detail::mode_suffix(right);

                Matrix<S> x = chain_sum(frame(left, right, {detail::core_items_long(c, d, core)}), args_short,
                                        big_coef, budget);
                if (core == SlotMode::N)
                    x += chain_sum(frame(left, right, {detail::core_items_short(c, d)}), args_short, small_coef, budget);
                r.maxCorrectionNorm = std::max(r.maxCorrectionNorm, frobenius_norm(x));
                r.xbar += x;
                r.corrections.push_back({label, x});

                const Matrix<S> g = chain_sum(frame(left, right, {slot_items(c, core)}), args_short, small_coef, budget) -
                                    chain_sum(frame(left, right, {slot_items(d, core)}), args_short, small_coef, budget);
                const int gi = (left == SlotMode::N ? 4 : 0) + (right == SlotMode::N ? 2 : 0) + (core == SlotMode::N ? 1 : 0);
                r.groups.push_back({has_prefix && has_suffix ? std::string(detail::roman(gi)) : label, g});
            }
    for (SlotMode left : detail::flank_modes(has_prefix))
        for (SlotMode right : detail::flank_modes(has_suffix)) {
            std::string label;
            if (has_prefix) label += lname + detail::mode_suffix(left) + ",";
            label += "C_N,D_N";
            if (has_suffix) label += "," + rname + detail::mode_suffix(right);
            const Matrix<S> t = chain_sum(frame(left, right, {slot_items(c, SlotMode::N), slot_items(d, SlotMode::N)}),
                                          args_long, big_coef, budget);
            trailing += t;
            r.trailing.push_back({label, t});
        }
    r.rhs = r.rhsMain + r.xbar + trailing;
    r.impliedCorrection = r.lhs - r.rhsMain - trailing;
    r.residual = frobenius_norm(r.lhs - r.rhs);
    return r;
}

// GDOI case: LHS = T_{f^{[2]}}^{C,D,X_1}(C-D, Y).
template <class S>
PerturbationReport<S> perturbation_check_gdoi(const UnivariatePtr<S>& f, const JordanDecomposition<S>& c,
                                              const JordanDecomposition<S>& d, const JordanDecomposition<S>& x1,
                                              const Matrix<S>& y, std::size_t budget = default_budget()) {
    return perturbation_check(f, 1, {x1}, c, d, {y}, budget);
}

template <class S>
PerturbationReport<S> perturbation_check_general(const UnivariatePtr<S>& f, int j,
                                                 const std::vector<JordanDecomposition<S>>& xs,
                                                 const JordanDecomposition<S>& c, const JordanDecomposition<S>& d,
                                                 const std::vector<Matrix<S>>& ys, std::size_t budget = default_budget()) {
    return perturbation_check(f, j, xs, c, d, ys, budget);
}

struct ContinuityReport {
    std::vector<double> steps;
    std::vector<double> residuals;
    double slope = 0;  // least-squares slope of log r against log t
};

// r_l = ||T(X_j + t_l E_j) - T(X_j)||_F with the Jordan structure held fixed.
template <class S>
ContinuityReport continuity_experiment(const FunctionPtr<S>& beta, const std::vector<Matrix<S>>& xs,
                                       const std::vector<Matrix<S>>& es, const std::vector<Matrix<S>>& ys,
                                       const std::vector<S>& steps, double tol, std::size_t budget = default_budget()) {
    if (xs.size() != es.size()) throw DimensionMismatch("one direction per parameter matrix");
    auto build = [&](const S* t) {
        GmoiProblem<S> p;
        p.beta = beta;
        p.args = ys;
        p.budget = budget;
        for (std::size_t i = 0; i < xs.size(); ++i)
            p.params.push_back(decompose_auto(t ? Matrix<S>(xs[i] + *t * es[i]) : xs[i], tol));
        return p;
    };
    const auto base = build(nullptr);
    const Matrix<S> t0 = eval_gmoi(base);
    ContinuityReport r;
    std::vector<double> lx, ly;
    for (const auto& t : steps) {
        const auto p = build(&t);
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (structure_signature(p.params[i]) != structure_signature(base.params[i]))
                throw StructureInstability("Jordan structure of parameter " + std::to_string(i + 1) +
                                           " changes along the family at t = " +
                                           format_double(ScalarTraits<S>::re(t)));
        const double res = frobenius_norm(eval_gmoi(p) - t0);
        r.steps.push_back(ScalarTraits<S>::abs(t));
        r.residuals.push_back(res);
        if (res > 0 && r.steps.back() > 0) {
            lx.push_back(std::log(r.steps.back()));
            ly.push_back(std::log(res));
        }
    }
    if (lx.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= double(lx.size());
        my /= double(lx.size());
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        r.slope = sxx > 0 ? sxy / sxx : 0.0;
    }
    return r;
}

} // namespace gmoi
