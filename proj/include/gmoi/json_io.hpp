#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "analysis.hpp"
#include "derivative.hpp"
#include "functions.hpp"
#include "jordan.hpp"

namespace gmoi {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
    throw ValidationError(where + ": " + what);
}

// Exact value of a decimal literal such as "-1.25e-3" or a fraction "p/q".
inline mpq_class parse_rational(const std::string& text, const std::string& where) {
    try {
        if (text.find('/') != std::string::npos) {
            mpq_class q(text, 10);
            q.canonicalize();
            return q;
        }
        std::string s = text;
        long exp10 = 0;
        if (auto e = s.find_first_of("eE"); e != std::string::npos) {
            exp10 = std::stol(s.substr(e + 1));
            s = s.substr(0, e);
        }
        bool neg = false;
        if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
            neg = s[0] == '-';
            s = s.substr(1);
        }
        std::string digits;
        long frac = 0;
        bool dot = false;
        for (char c : s) {
            if (c == '.') {
                if (dot) throw std::invalid_argument("two decimal points");
                dot = true;
            } else if (c >= '0' && c <= '9') {
                digits += c;
                if (dot) ++frac;
            } else {
                throw std::invalid_argument("bad character");
            }
        }
        if (digits.empty()) throw std::invalid_argument("no digits");
        mpz_class num(digits, 10), den = 1;
        exp10 -= frac;
        mpz_class p10;
        mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
        if (exp10 >= 0)
            num *= p10;
        else
            den = p10;
        mpq_class q(num, den);
        q.canonicalize();
        return neg ? mpq_class(-q) : q;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        bad(where, "cannot parse number '" + text + "'");
    }
}

inline std::string rational_text(const mpq_class& q) { return q.get_str(); }

template <class S>
S part_from_json(const json& j, const std::string& where) {
    if constexpr (is_exact_v<S>) {
        if (j.is_string()) return QComplex(parse_rational(j.get<std::string>(), where));
        if (j.is_number_integer()) return QComplex(mpq_class(j.dump()));
        if (j.is_number()) return QComplex(parse_rational(j.dump(), where));
        bad(where, "expected a number or \"p/q\" string");
    } else {
        if (j.is_number()) return S(j.get<double>(), 0.0);
        if (j.is_string()) return S(parse_rational(j.get<std::string>(), where).get_d(), 0.0);
        bad(where, "expected a number or \"p/q\" string");
    }
}

} // namespace detail

template <class S>
json scalar_to_json(const S& z) {
    if constexpr (is_exact_v<S>)
        return json::array({detail::rational_text(z.re), detail::rational_text(z.im)});
    else
        return json::array({z.real(), z.imag()});
}

// [re, im] pair or a bare real number.
template <class S>
S scalar_from_json(const json& j, const std::string& where = "scalar") {
    if (j.is_array()) {
        if (j.size() != 2) detail::bad(where, "complex values are [re, im] pairs");
        const S re = detail::part_from_json<S>(j[0], where + "[0]");
        const S im = detail::part_from_json<S>(j[1], where + "[1]");
        if constexpr (is_exact_v<S>)
            return QComplex(re.re, im.re);
        else
            return S(re.real(), im.real());
    }
    return detail::part_from_json<S>(j, where);
}

template <class S>
json matrix_to_json(const Matrix<S>& m) {
    json e = json::array();
    for (const auto& v : m.entries()) e.push_back(scalar_to_json(v));
    return {{"dim", m.dim()}, {"entries", e}};
}

// {"dim": n, "entries": [[re, im], ...]} row-major, or a nested list of rows.
template <class S>
Matrix<S> matrix_from_json(const json& j, const std::string& where = "matrix") {
    if (j.is_array()) {
        const int n = int(j.size());
        Matrix<S> m(n);
        for (int r = 0; r < n; ++r) {
            if (!j[r].is_array() || int(j[r].size()) != n) detail::bad(where, "rows must form a square array");
            for (int c = 0; c < n; ++c)
                m(r, c) = scalar_from_json<S>(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
        }
        return m;
    }
    if (!j.is_object() || !j.contains("dim") || !j.contains("entries"))
        detail::bad(where, "expected an object with fields 'dim' and 'entries'");
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1) detail::bad(where + ".dim", "must be a positive integer");
    const int n = j["dim"].get<int>();
    const auto& e = j["entries"];
    if (!e.is_array() || e.size() != std::size_t(n) * n)
        detail::bad(where + ".entries", "expected " + std::to_string(n * n) + " entries");
    std::vector<S> v;
    for (std::size_t k = 0; k < e.size(); ++k) v.push_back(scalar_from_json<S>(e[k], where + ".entries[" + std::to_string(k) + "]"));
    return Matrix<S>(n, std::move(v));
}

template <class S>
json decomposition_to_json(const JordanDecomposition<S>& d) {
    json ev = json::array(), blocks = json::array();
    for (const auto& l : d.eigenvalues) ev.push_back(scalar_to_json(l));
    for (const auto& b : d.blocks)
        blocks.push_back({{"eigenIndex", b.eigenIndex},
                          {"blockIndex", b.blockIndex},
                          {"eigenvalue", scalar_to_json(b.eigenvalue)},
                          {"order", b.order},
                          {"projector", matrix_to_json(b.projector)},
                          {"nilpotent", matrix_to_json(b.nilpotent)}});
    return {{"dim", d.dim},
            {"eigenvalues", ev},
            {"algMultiplicities", d.algMultiplicities},
            {"geomMultiplicities", d.geomMultiplicities},
            {"blocks", blocks},
            {"transform", matrix_to_json(d.transform)},
            {"inverse", matrix_to_json(d.inverseTransform)},
            {"source", matrix_to_json(d.source)},
            {"toleranceUsed", d.toleranceUsed}};
}

// Rebuilds the decomposition from the transform and the block list, which is
// stored in column order of the transform.
template <class S>
JordanDecomposition<S> decomposition_from_json(const json& j, const std::string& where = "decomposition") {
    if (!j.is_object() || !j.contains("transform") || !j.contains("blocks"))
        detail::bad(where, "expected fields 'transform' and 'blocks'");
    const Matrix<S> v = matrix_from_json<S>(j["transform"], where + ".transform");
    std::vector<BlockSpec<S>> specs;
    for (std::size_t i = 0; i < j["blocks"].size(); ++i) {
        const auto& b = j["blocks"][i];
        const std::string w = where + ".blocks[" + std::to_string(i) + "]";
        if (!b.contains("eigenvalue") || !b.contains("order")) detail::bad(w, "expected 'eigenvalue' and 'order'");
        specs.push_back({scalar_from_json<S>(b["eigenvalue"], w + ".eigenvalue"), b["order"].get<int>()});
    }
    const double tol = j.value("toleranceUsed", 1e-10);
    std::optional<Matrix<S>> vinv;
    if (j.contains("inverse")) vinv = matrix_from_json<S>(j["inverse"], where + ".inverse");
    auto d = from_jordan_form(v, specs, std::max(tol, is_exact_v<S> ? 0.0 : 1e-12), vinv);
    if (j.contains("source")) d.source = matrix_from_json<S>(j["source"], where + ".source");
    d.toleranceUsed = tol;
    return d;
}

// A parameter file is either a decomposition or a plain matrix (decomposed automatically).
template <class S>
JordanDecomposition<S> parameter_from_json(const json& j, double tol, const std::string& where = "parameter") {
    if (j.is_object() && j.contains("blocks") && j.contains("transform")) return decomposition_from_json<S>(j, where);
    if (j.is_object() && j.contains("decomposition")) return decomposition_from_json<S>(j["decomposition"], where + ".decomposition");
    if (j.is_object() && j.contains("matrix")) return decompose_auto(matrix_from_json<S>(j["matrix"], where + ".matrix"), tol);
    return decompose_auto(matrix_from_json<S>(j, where), tol);
}

template <class S>
Matrix<S> plain_matrix_from_json(const json& j, const std::string& where = "matrix") {
    if (j.is_object() && j.contains("matrix")) return matrix_from_json<S>(j["matrix"], where + ".matrix");
    if (j.is_object() && j.contains("source") && j.contains("blocks")) return matrix_from_json<S>(j["source"], where + ".source");
    return matrix_from_json<S>(j, where);
}

template <class S>
json function_to_json(const MultiFunction<S>& f) {
    const std::string k = f.kind();
    auto coeffs = [](const std::vector<S>& c) {
        json a = json::array();
        for (const auto& v : c) a.push_back(scalar_to_json(v));
        return a;
    };
    if (auto p = dynamic_cast<const Polynomial<S>*>(&f)) return {{"kind", "polynomial"}, {"coeffs", coeffs(p->coeffs())}};
    if (dynamic_cast<const Exponential<S>*>(&f)) return {{"kind", "exp"}};
    if (auto r = dynamic_cast<const RationalFunction<S>*>(&f))
        return {{"kind", "rational"}, {"num", coeffs(r->numerator().coeffs())}, {"den", coeffs(r->denominator().coeffs())}};
    if (auto l = dynamic_cast<const DividedDifferenceLift<S>*>(&f))
        return {{"kind", "dd-lift"}, {"base", function_to_json(*l->base())}, {"order", l->order()}};
    if (auto m = dynamic_cast<const ProductMoiFunction<S>*>(&f))
        return {{"kind", "product-moi"}, {"beta", function_to_json(*m->beta())}, {"zeta", m->zeta()}};
    if (auto m = dynamic_cast<const MonomialSum<S>*>(&f)) {
        json t = json::array();
        for (const auto& term : m->terms()) t.push_back({{"coeff", scalar_to_json(term.coeff)}, {"powers", term.powers}});
        return {{"kind", "monomials"}, {"arity", m->arity()}, {"terms", t}};
    }
    if (auto s = dynamic_cast<const SeparableProduct<S>*>(&f)) {
        json fs = json::array();
        for (const auto& fac : s->factors()) fs.push_back({{"function", function_to_json(*fac.fn)}, {"vars", fac.vars}});
        return {{"kind", "separable-product"}, {"arity", s->arity()}, {"factors", fs}};
    }
    throw ValidationError("function kind '" + k + "' has no JSON form");
}

template <class S>
FunctionPtr<S> function_from_json(const json& j, const std::string& where = "function");

template <class S>
UnivariatePtr<S> univariate_from_json(const json& j, const std::string& where = "function") {
    auto f = function_from_json<S>(j, where);
    auto u = std::dynamic_pointer_cast<const UnivariateFunction<S>>(f);
    if (!u) detail::bad(where, "expected a univariate function (polynomial, power, exp, truncated-exp, rational)");
    return u;
}

template <class S>
FunctionPtr<S> function_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) detail::bad(where, "expected an object with a 'kind'");
    const std::string k = j["kind"].get<std::string>();
    auto coeffs = [&](const char* field) {
        if (!j.contains(field) || !j[field].is_array()) detail::bad(where + "." + field, "expected a coefficient list");
        std::vector<S> c;
        for (std::size_t i = 0; i < j[field].size(); ++i)
            c.push_back(scalar_from_json<S>(j[field][i], where + "." + field + "[" + std::to_string(i) + "]"));
        return c;
    };
    auto integer = [&](const char* field) {
        if (!j.contains(field) || !j[field].is_number_integer()) detail::bad(where + "." + field, "expected an integer");
        return j[field].get<int>();
    };
    if (k == "polynomial") return make_polynomial<S>(coeffs("coeffs"));
    if (k == "exp") return make_exp<S>();
    if (k == "power") return make_power<S>(integer("degree"));
    if (k == "truncated-exp") return make_truncated_exp<S>(integer("order"));
    if (k == "rational") return make_rational<S>(coeffs("num"), coeffs("den"));
    if (k == "dd-lift") {
        if (!j.contains("base")) detail::bad(where + ".base", "missing");
        return lift_divided_difference<S>(univariate_from_json<S>(j["base"], where + ".base"), integer("order"));
    }
    if (k == "product-moi") {
        if (!j.contains("beta")) detail::bad(where + ".beta", "missing");
        return std::make_shared<ProductMoiFunction<S>>(function_from_json<S>(j["beta"], where + ".beta"), integer("zeta"));
    }
    if (k == "monomials") {
        const int r = integer("arity");
        std::vector<typename MonomialSum<S>::Term> terms;
        for (std::size_t i = 0; i < j.value("terms", json::array()).size(); ++i) {
            const auto& t = j["terms"][i];
            const std::string w = where + ".terms[" + std::to_string(i) + "]";
            terms.push_back({scalar_from_json<S>(t.at("coeff"), w + ".coeff"), t.at("powers").get<std::vector<int>>()});
        }
        return std::make_shared<MonomialSum<S>>(r, terms);
    }
    if (k == "separable-product") {
        const int r = integer("arity");
        std::vector<typename SeparableProduct<S>::Factor> fs;
        for (std::size_t i = 0; i < j.value("factors", json::array()).size(); ++i) {
            const auto& t = j["factors"][i];
            const std::string w = where + ".factors[" + std::to_string(i) + "]";
            fs.push_back({function_from_json<S>(t.at("function"), w + ".function"), t.at("vars").get<std::vector<int>>()});
        }
        return std::make_shared<SeparableProduct<S>>(r, fs);
    }
    detail::bad(where + ".kind", "unknown function kind '" + k + "'");
}

inline json report_to_json(const ValidationReport& r) {
    return {{"idempotency", r.idempotency},   {"orthogonality", r.orthogonality}, {"completeness", r.completeness},
            {"nilpotency", r.nilpotency},     {"confinement", r.confinement},     {"reconstruction", r.reconstruction},
            {"ordersMinimal", r.ordersMinimal}, {"maxResidual", r.max_residual()}};
}

inline json report_to_json(const NormBoundReport& r) {
    json j = {{"norm", r.norm},
              {"perPatternNorms", r.perPatternNorms},
              {"perPatternUpper", r.perPatternUpper},
              {"upperBound", r.upperBound},
              {"sortedLower", r.sortedLower},
              {"minBeta", r.minBeta},
              {"conditionHolds", r.conditionHolds}};
    j["minBetaLower"] = r.minBetaLower ? json(*r.minBetaLower) : json(nullptr);
    return j;
}

inline json report_to_json(const LipschitzReport& r) {
    return {{"actual", r.actual}, {"bound", r.bound}, {"upsilon", r.upsilon}, {"termBounds", r.termBounds}};
}

inline json report_to_json(const ContinuityReport& r) {
    return {{"steps", r.steps}, {"residuals", r.residuals}, {"slope", r.slope}};
}

template <class S>
json report_to_json(const PerturbationReport<S>& r, bool dump_terms) {
    auto named = [&](const std::vector<NamedMatrix<S>>& v) {
        json a = json::array();
        for (const auto& m : v) {
            json e = {{"name", m.name}, {"norm", frobenius_norm(m.value)}};
            if (dump_terms) e["matrix"] = matrix_to_json(m.value);
            a.push_back(e);
        }
        return a;
    };
    json j = {{"residual", r.residual},
              {"lhsNorm", frobenius_norm(r.lhs)},
              {"rhsMainNorm", frobenius_norm(r.rhsMain)},
              {"correctionSumNorm", frobenius_norm(r.xbar)},
              {"maxCorrectionNorm", r.maxCorrectionNorm},
              {"impliedCorrectionNorm", frobenius_norm(r.impliedCorrection)},
              {"corrections", named(r.corrections)},
              {"groups", named(r.groups)},
              {"trailing", named(r.trailing)}};
    if (dump_terms) {
        j["lhs"] = matrix_to_json(r.lhs);
        j["rhsMain"] = matrix_to_json(r.rhsMain);
        j["rhs"] = matrix_to_json(r.rhs);
    }
    return j;
}

inline json expansion_to_json(const DerivativeExpansion& e) {
    json terms = json::array();
    for (const auto& t : e.terms) {
        json p = json::array();
        for (auto s : t.pattern) p.push_back(to_string(s));
        terms.push_back({{"coeff", t.coeff}, {"kind", t.correction ? "correction" : "gmoi"}, {"pattern", p},
                         {"order", t.correction ? t.order : t.dd_order()}});
    }
    return {{"n", e.n}, {"terms", terms}};
}

} // namespace gmoi
