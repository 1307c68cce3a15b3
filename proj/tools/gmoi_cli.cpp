#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <gmoi.hpp>

using namespace gmoi;

namespace {

struct RunConfig {
    double tol = 1e-10;
    bool exact = false;
    std::size_t budget = default_budget();
    bool json = false;
    std::uint64_t seed = 1;
    bool dumpTerms = false;
    double xstep = 1e-3;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

template <class S>
Matrix<S> load_matrix(const std::string& path) {
    return plain_matrix_from_json<S>(read_json_file(path), path);
}

template <class S>
JordanDecomposition<S> load_param(const std::string& path, double tol) {
    return parameter_from_json<S>(read_json_file(path), tol, path);
}

template <class S>
FunctionPtr<S> load_function(const std::string& path) {
    return function_from_json<S>(read_json_file(path), path);
}

template <class S>
UnivariatePtr<S> load_univariate(const std::string& path) {
    return univariate_from_json<S>(read_json_file(path), path);
}

// Text rendering of the JSON report: nested keys, matrices as rows.
void render_text(std::ostream& os, const json& j, const std::string& indent = "") {
    auto is_matrix = [](const json& v) { return v.is_object() && v.contains("dim") && v.contains("entries") && v.size() == 2; };
    auto scalar = [](const json& v) {
        if (v.is_array() && v.size() == 2 && !v[0].is_array()) {
            std::ostringstream s;
            if (v[0].is_string())
                s << v[0].get<std::string>() << (v[1].get<std::string>()[0] == '-' ? "" : "+") << v[1].get<std::string>() << "i";
            else
                s << format_double(v[0].get<double>()) << (v[1].get<double>() < 0 ? "" : "+") << format_double(v[1].get<double>()) << "i";
            return s.str();
        }
        return v.is_number_float() ? format_double(v.get<double>()) : v.dump();
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& v = it.value();
        if (is_matrix(v)) {
            os << indent << it.key() << ":\n";
            const int n = v["dim"].get<int>();
            for (int r = 0; r < n; ++r) {
                os << indent << "  ";
                for (int c = 0; c < n; ++c) os << (c ? "  " : "") << scalar(v["entries"][r * n + c]);
                os << "\n";
            }
        } else if (v.is_object()) {
            os << indent << it.key() << ":\n";
            render_text(os, v, indent + "  ");
        } else if (v.is_array() && !v.empty() && v[0].is_object()) {
            os << indent << it.key() << ":\n";
            for (std::size_t k = 0; k < v.size(); ++k) {
                os << indent << "  [" << k << "]\n";
                render_text(os, v[k], indent + "    ");
            }
        } else if (v.is_array() && !(v.size() == 2 && !v.empty() && !v[0].is_array() && !v[0].is_number_integer())) {
            os << indent << it.key() << ": [";
            for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << scalar(v[k]);
            os << "]\n";
        } else {
            os << indent << it.key() << ": " << scalar(v) << "\n";
        }
    }
}

template <class S>
std::vector<JordanDecomposition<S>> load_params(const std::vector<std::string>& files, double tol) {
    std::vector<JordanDecomposition<S>> out;
    for (const auto& f : files) out.push_back(load_param<S>(f, tol));
    return out;
}

template <class S>
std::vector<Matrix<S>> load_matrices(const std::vector<std::string>& files) {
    std::vector<Matrix<S>> out;
    for (const auto& f : files) out.push_back(load_matrix<S>(f));
    return out;
}

std::vector<int> parse_sizes(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ValidationError("--sizes: cannot parse '" + tok + "'");
        }
    }
    return out;
}

// "2", "1/2", "1+2i", "-0.5-1i", "3i".
template <class S>
S parse_complex(const std::string& text) {
    const std::string where = "eigenvalue '" + text + "'";
    if (text.empty()) throw ValidationError(where + ": empty");
    if (text.back() != 'i') return scalar_from_json<S>(json(text), where);
    const std::string body = text.substr(0, text.size() - 1);
    std::size_t split = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;)
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split = k;
            break;
        }
    std::string re = "0", im = body;
    if (split != std::string::npos) {
        re = body.substr(0, split);
        im = body.substr(split);
    }
    if (im == "+" || im == "-" || im.empty()) im += "1";
    if (im[0] == '+') im = im.substr(1);
    return scalar_from_json<S>(json::array({re, im}), where);
}

// "lambda:size,lambda:size,..."
template <class S>
std::vector<BlockSpec<S>> parse_blocks(const std::string& text) {
    std::vector<BlockSpec<S>> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto colon = tok.rfind(':');
        if (colon == std::string::npos) throw ValidationError("--blocks: expected lambda:size in '" + tok + "'");
        int size = 0;
        try {
            size = std::stoi(tok.substr(colon + 1));
        } catch (const std::exception&) {
            throw ValidationError("--blocks: bad size in '" + tok + "'");
        }
        out.push_back({parse_complex<S>(tok.substr(0, colon)), size});
    }
    if (out.empty()) throw ValidationError("--blocks: no blocks given");
    return out;
}

struct Inputs {
    std::string matrix, transform, sizes, function, x, y, c, d, blocks, out;
    std::vector<std::string> params, args, args2, directions, matrices;
    int order = 1, slot = 1, levels = 12, width = 7;
    bool classical = false, patterns = false, oracle = false, unitary = false;
    double fdStep = 1e-3;
};

template <class S>
json cmd_decompose(const RunConfig& cfg, const Inputs& in) {
    const Matrix<S> x = load_matrix<S>(in.matrix);
    JordanDecomposition<S> d;
    if (!in.transform.empty())
        d = decompose_prescribed(x, load_matrix<S>(in.transform), parse_sizes(in.sizes), cfg.tol);
    else
        d = decompose_auto(x, cfg.tol);
    return {{"decomposition", decomposition_to_json(d)}, {"validation", report_to_json(validate(d))}};
}

template <class S>
json cmd_funcmat(const RunConfig& cfg, const Inputs& in) {
    auto f = load_function<S>(in.function);
    auto js = load_params<S>(in.matrices, cfg.tol);
    const Matrix<S> r = eval_multivariate(*f, js);
    json out = {{"result", matrix_to_json(r)}};
    if (auto u = std::dynamic_pointer_cast<const UnivariateFunction<S>>(f); u && js.size() == 1) {
        const Matrix<S> direct = u->apply(js[0].source);
        out["direct"] = matrix_to_json(direct);
        out["residual"] = frobenius_norm(r - direct) / std::max(1.0, frobenius_norm(direct));
    }
    return out;
}

template <class S>
GmoiProblem<S> load_problem(const RunConfig& cfg, const Inputs& in) {
    GmoiProblem<S> p;
    p.beta = load_function<S>(in.function);
    p.params = load_params<S>(in.params, cfg.tol);
    p.args = load_matrices<S>(in.args);
    p.budget = cfg.budget;
    p.check();
    return p;
}

template <class S>
json cmd_gmoi(const RunConfig& cfg, const Inputs& in) {
    const auto p = load_problem<S>(cfg, in);
    const Matrix<S> r = in.classical ? eval_classical_moi(p) : eval_gmoi(p);
    json out = {{"result", matrix_to_json(r)}, {"norm", frobenius_norm(r)}};
    if (in.patterns) {
        json terms = json::array();
        for (const auto& t : pattern_terms(p)) {
            json e = {{"index", t.pattern.index}, {"bits", t.pattern.bits}, {"norm", frobenius_norm(t.value)}};
            if (cfg.dumpTerms) e["value"] = matrix_to_json(t.value);
            terms.push_back(e);
        }
        out["patterns"] = terms;
    }
    return out;
}

template <class S>
json cmd_bounds(const RunConfig& cfg, const Inputs& in) {
    return report_to_json(norm_bounds(load_problem<S>(cfg, in)));
}

template <class S>
json cmd_lipschitz(const RunConfig& cfg, const Inputs& in) {
    const auto p = load_problem<S>(cfg, in);
    return report_to_json(lipschitz_check(p, p.args, load_matrices<S>(in.args2)));
}

template <class S>
json cmd_perturbation(const RunConfig& cfg, const Inputs& in) {
    auto f = load_univariate<S>(in.function);
    const auto r = perturbation_check(f, in.slot, load_params<S>(in.params, cfg.tol), load_param<S>(in.c, cfg.tol),
                                      load_param<S>(in.d, cfg.tol), load_matrices<S>(in.args), cfg.budget);
    return report_to_json(r, cfg.dumpTerms);
}

template <class S>
json cmd_continuity(const RunConfig& cfg, const Inputs& in) {
    std::vector<S> steps;
    for (int l = 1; l <= in.levels; ++l) steps.push_back(ScalarTraits<S>::from_ratio(1, 1L << l));
    const auto r = continuity_experiment(load_function<S>(in.function), load_matrices<S>(in.params),
                                         load_matrices<S>(in.directions), load_matrices<S>(in.args), steps, cfg.tol,
                                         cfg.budget);
    return report_to_json(r);
}

template <class S>
json cmd_derivative(const RunConfig& cfg, const Inputs& in) {
    auto f = load_univariate<S>(in.function);
    const Matrix<S> x = load_matrix<S>(in.x), y = load_matrix<S>(in.y);
    DerivativeOptions opt;
    opt.xStep = cfg.xstep;
    opt.budget = cfg.budget;
    const Matrix<S> r = in.order == 1 ? first_derivative(f, decompose_auto(x, cfg.tol), y, cfg.budget)
                                      : nth_derivative(f, x, y, in.order, cfg.tol, opt);
    json out = {{"order", in.order}, {"result", matrix_to_json(r)}, {"norm", frobenius_norm(r)}};
    if (cfg.dumpTerms) out["expansion"] = expansion_to_json(build_expansion(in.order));
    if (in.oracle) {
        const Matrix<S> o = fd_oracle(*f, x, y, in.order, in.fdStep, std::max(in.width, in.order + 3));
        out["oracle"] = matrix_to_json(o);
        out["oracleResidual"] = frobenius_norm(r - o);
    }
    return out;
}

template <class S>
json cmd_gen_fixture(const RunConfig& cfg, const Inputs& in) {
    Rng rng(cfg.seed);
    const auto blocks = parse_blocks<S>(in.blocks);
    const auto fx = make_fixture(blocks, rng, in.unitary ? FixtureKind::Unitary : FixtureKind::Similar, cfg.tol);
    json spec = json::array();
    for (const auto& b : blocks) spec.push_back({{"eigenvalue", scalar_to_json(b.eigenvalue)}, {"size", b.size}});
    json out = {{"seed", cfg.seed}, {"blocks", spec}, {"matrix", matrix_to_json(fx.matrix)},
                {"decomposition", decomposition_to_json(fx.decomposition)}};
    if (!in.out.empty()) {
        for (const auto& [suffix, field] : {std::pair{".matrix.json", "matrix"}, std::pair{".decomposition.json", "decomposition"}}) {
            std::ofstream f(in.out + suffix);
            if (!f) throw ValidationError(in.out + suffix + ": cannot write file");
            f << out[field].dump(2) << "\n";
        }
    }
    return out;
}

struct Check {
    std::string name;
    bool ok;
    double value;
};

template <class S>
std::vector<Check> selftest_checks(const RunConfig& cfg) {
    using T = ScalarTraits<S>;
    const double tol = is_exact_v<S> ? 0.0 : 1e-9;
    Rng rng(cfg.seed);
    std::vector<Check> out;
    auto add = [&](std::string name, double v, double lim) { out.push_back({std::move(name), v <= lim, v}); };

    auto fx = make_fixture(random_structure<S>(4, 2, 2, rng), rng);
    add("decomposition invariants", validate(fx.decomposition).max_residual(), tol);

    auto p = make_polynomial<S>({T::from_int(1), T::from_int(-2), T::zero(), T::from_int(3)});
    add("spectral map vs Horner", frobenius_norm(eval_univariate(*p, fx.decomposition) - p->apply(fx.matrix)), tol * 10);

    auto dg = make_fixture(random_diagonal_structure<S>(3, rng), rng);
    const Matrix<S> y = random_matrix<S>(3, rng);
    GmoiProblem<S> one{make_constant<S>(2, T::one()), {dg.decomposition, dg.decomposition}, {y}, cfg.budget};
    add("constant symbol", frobenius_norm(eval_gmoi(one) - y), tol);

    GmoiProblem<S> dk{lift_divided_difference<S>(make_power<S>(2), 1), {dg.decomposition, dg.decomposition}, {y}, cfg.budget};
    const Matrix<S> fd = dg.matrix * y + y * dg.matrix;
    add("first divided difference of z^2", frobenius_norm(eval_gmoi(dk) - fd), tol);

    Matrix<S> sum(fx.decomposition.dim);
    GmoiProblem<S> gm{lift_divided_difference<S>(make_power<S>(3), 1), {fx.decomposition, fx.decomposition},
                      {random_matrix<S>(fx.decomposition.dim, rng)}, cfg.budget};
    for (const auto& t : pattern_terms(gm)) sum += t.value;
    add("pattern sum", frobenius_norm(sum - eval_gmoi(gm)), tol);
    const Matrix<S> fdx = fx.matrix * fx.matrix * gm.args[0] + fx.matrix * gm.args[0] * fx.matrix + gm.args[0] * fx.matrix * fx.matrix;
    add("first derivative of z^3", frobenius_norm(eval_gmoi(gm) - fdx), tol * 10);
    return out;
}

json cmd_selftest(const RunConfig& cfg, bool& ok) {
    json out = json::array();
    ok = true;
    auto run = [&](const char* mode, const std::vector<Check>& checks) {
        for (const auto& c : checks) {
            out.push_back({{"mode", mode}, {"check", c.name}, {"value", c.value}, {"pass", c.ok}});
            ok = ok && c.ok;
        }
    };
    run("float", selftest_checks<Complex>(cfg));
    run("exact", selftest_checks<QComplex>(cfg));
    return {{"checks", out}, {"pass", ok}};
}

template <class S>
json dispatch(const CLI::App& app, const RunConfig& cfg, const Inputs& in) {
    auto is = [&](const char* name) { return app.got_subcommand(name); };
    if (is("decompose")) return cmd_decompose<S>(cfg, in);
    if (is("funcmat")) return cmd_funcmat<S>(cfg, in);
    if (is("gmoi")) return cmd_gmoi<S>(cfg, in);
    if (is("bounds")) return cmd_bounds<S>(cfg, in);
    if (is("lipschitz")) return cmd_lipschitz<S>(cfg, in);
    if (is("verify-perturbation")) return cmd_perturbation<S>(cfg, in);
    if (is("continuity")) return cmd_continuity<S>(cfg, in);
    if (is("derivative")) return cmd_derivative<S>(cfg, in);
    return cmd_gen_fixture<S>(cfg, in);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized multiple operator integrals for matrices with Jordan structure"};
    app.require_subcommand(1);
    RunConfig cfg;
    Inputs in;
    app.add_option("--tol", cfg.tol, "Numerical tolerance")->check(CLI::PositiveNumber);
    app.add_flag("--exact", cfg.exact, "Exact rational arithmetic");
    app.add_option("--budget", cfg.budget, "Maximum number of summed terms")->check(CLI::Range(std::size_t(1), std::size_t(-1)));
    app.add_flag("--json", cfg.json, "Machine-readable JSON output");
    app.add_option("--seed", cfg.seed, "Random seed");
    app.add_flag("--dump-terms", cfg.dumpTerms, "Include individual terms in the report");
    app.add_option("--xstep", cfg.xstep, "Step for numerical differentiation of correction terms")->check(CLI::PositiveNumber);

    auto* dec = app.add_subcommand("decompose", "Jordan spectral decomposition");
    dec->add_option("matrix", in.matrix, "Matrix file")->required();
    dec->add_option("--transform", in.transform, "Prescribed transform V");
    dec->add_option("--sizes", in.sizes, "Block sizes for the prescribed transform, comma separated");

    auto* fm = app.add_subcommand("funcmat", "Matrix function via spectral data");
    fm->add_option("--function", in.function, "Function file")->required();
    fm->add_option("--matrices,matrices", in.matrices, "Matrix or decomposition files, comma separated")->required()->delimiter(',');

    auto add_problem = [&](CLI::App* s) {
        s->add_option("--beta", in.function, "Symbol file")->required();
        s->add_option("--params,--param", in.params, "Parameter matrices or decompositions (zeta+1)")->required()->delimiter(',');
        s->add_option("--args,--arg", in.args, "Argument matrices (zeta)")->required()->delimiter(',');
    };
    auto* gm = app.add_subcommand("gmoi", "Evaluate a generalized multiple operator integral");
    add_problem(gm);
    gm->add_flag("--classical", in.classical, "Classical MOI (projector terms only)");
    gm->add_flag("--patterns", in.patterns, "Report nilpotent pattern terms");

    auto* bd = app.add_subcommand("bounds", "Norm bounds");
    add_problem(bd);

    auto* lp = app.add_subcommand("lipschitz", "Lipschitz estimate between two argument lists");
    add_problem(lp);
    lp->add_option("--args2,--arg2", in.args2, "Second argument list (zeta)")->required()->delimiter(',');

    auto* vp = app.add_subcommand("verify-perturbation", "Check the perturbation formula");
    vp->add_option("--function", in.function, "Univariate function file")->required();
    vp->add_option("--c", in.c, "Matrix C")->required();
    vp->add_option("--d", in.d, "Matrix D")->required();
    vp->add_option("--params,--param", in.params, "Remaining parameter matrices X_1..X_zeta")->delimiter(',');
    vp->add_option("--args,--arg", in.args, "Argument matrices Y_1..Y_zeta")->required()->delimiter(',');
    vp->add_option("--slot", in.slot, "Insertion slot j (1-based)");

    auto* ct = app.add_subcommand("continuity", "Continuity experiment with steps 2^-l");
    ct->add_option("--beta", in.function, "Symbol file")->required();
    ct->add_option("--params,--param", in.params, "Parameter matrices")->required()->delimiter(',');
    ct->add_option("--directions,--direction", in.directions, "Perturbation directions, one per parameter")->required()->delimiter(',');
    ct->add_option("--args,--arg", in.args, "Argument matrices")->required()->delimiter(',');
    ct->add_option("--levels", in.levels, "Number of levels")->check(CLI::Range(1, 52));

    auto* dv = app.add_subcommand("derivative", "n-th derivative of f(X + tY) at t = 0");
    dv->add_option("--function", in.function, "Univariate function file")->required();
    dv->add_option("--x", in.x, "Matrix X")->required();
    dv->add_option("--y", in.y, "Direction Y")->required();
    dv->add_option("--order", in.order, "Derivative order")->check(CLI::Range(1, kMaxExpansionOrder));
    dv->add_flag("--verify,--oracle", in.oracle, "Compare against a finite-difference oracle");
    dv->add_option("--fd-step", in.fdStep, "Oracle step")->check(CLI::PositiveNumber);
    dv->add_option("--fd-width", in.width, "Oracle stencil width");

    auto* gf = app.add_subcommand("gen-fixture", "Random matrix with prescribed Jordan structure");
    gf->add_option("--blocks", in.blocks, "Blocks as lambda:size, comma separated (e.g. 2:2,1/2:1,1+2i:1)")->required();
    gf->add_flag("--unitary", in.unitary, "Unitary similarity (float mode)");
    gf->add_option("--out", in.out, "Write <prefix>.matrix.json and <prefix>.decomposition.json");

    auto* st = app.add_subcommand("selftest", "Run the built-in invariant checks");

    CLI11_PARSE(app, argc, argv);

    try {
        json out;
        int code = 0;
        if (st->parsed()) {
            bool ok = true;
            out = cmd_selftest(cfg, ok);
            code = ok ? 0 : 1;
        } else {
            out = cfg.exact ? dispatch<QComplex>(app, cfg, in) : dispatch<Complex>(app, cfg, in);
        }
        if (cfg.json)
            std::cout << out.dump(2) << "\n";
        else
            render_text(std::cout, out);
        return code;
    } catch (const BudgetExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: malformed input: " << e.what() << "\n";
        return 2;
    }
}
