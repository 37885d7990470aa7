#include "volterra/problemfile.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace volterra::problemfile {

using nlohmann::json;
using solver::ProblemKind;

namespace {

ProblemKind parse_kind(const std::string& s) {
    if (s == "vie1") return ProblemKind::Vie1;
    if (s == "vie2") return ProblemKind::Vie2;
    if (s == "vide") return ProblemKind::Vide;
    if (s == "nl_vie") return ProblemKind::NlVie;
    if (s == "nl_vide") return ProblemKind::NlVide;
    throw ProblemFileError("key \"kind\": unknown value \"" + s +
                           "\" (expected vie1, vie2, vide, nl_vie, or nl_vide)");
}

expr::Expr parse_field(const json& doc, const std::string& key) {
    if (!doc.at(key).is_string())
        throw ProblemFileError("key \"" + key + "\": expected an expression string");
    try {
        return expr::parse(doc.at(key).get<std::string>());
    } catch (const expr::ParseError& e) {
        throw ProblemFileError("key \"" + key + "\": " + e.what());
    }
}

void check_scope(const expr::Expr& e, const std::string& key,
                 const std::set<std::string>& allowed,
                 const std::map<std::string, double>& params) {
    for (const std::string& v : e.free_vars()) {
        if (allowed.count(v) || params.count(v)) continue;
        throw ProblemFileError("key \"" + key + "\": variable \"" + v +
                               "\" is not in scope here");
    }
}

std::vector<double> real_array(const json& doc, const std::string& key) {
    const json& a = doc.at(key);
    if (!a.is_array()) throw ProblemFileError("key \"" + key + "\": expected an array of reals");
    std::vector<double> out;
    for (const json& v : a) {
        if (!v.is_number())
            throw ProblemFileError("key \"" + key + "\": expected an array of reals");
        out.push_back(v.get<double>());
    }
    return out;
}

/// Detect f(y,u) = u (identity) or f(y,u) = u^m for a small positive integer
/// m, which unlocks the analytic Newton Jacobian.
int detect_power(const expr::Expr& f) {
    const expr::Node& r = f.root();
    if (r.kind == expr::NodeKind::Variable && r.name == "u") return 1;
    if (r.kind == expr::NodeKind::Binary && r.name == "^" &&
        r.lhs->kind == expr::NodeKind::Variable && r.lhs->name == "u" &&
        r.rhs->kind == expr::NodeKind::Number) {
        const double m = r.rhs->value;
        if (m == static_cast<int>(m) && m >= 1.0 && m <= 16.0) return static_cast<int>(m);
    }
    return 0;
}

}  // namespace

LoadedProblem parse_problem(const std::string& json_text,
                            const std::map<std::string, double>& param_overrides) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ProblemFileError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ProblemFileError("problem file must be a JSON object");

    static const std::set<std::string> known = {
        "kind", "kernel", "g",  "f",      "lambdas", "ics",
        "n",    "kernel_degree", "solution", "params",  "guess", "name"};
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!known.count(it.key()))
            throw ProblemFileError("unknown key \"" + it.key() + "\"");

    for (const char* key : {"kind", "kernel", "g", "n"})
        if (!doc.contains(key))
            throw ProblemFileError(std::string("missing required key \"") + key + "\"");

    LoadedProblem lp;
    lp.spec.kind = parse_kind(doc.at("kind").get<std::string>());

    if (doc.contains("params")) {
        const json& p = doc.at("params");
        if (!p.is_object()) throw ProblemFileError("key \"params\": expected an object of reals");
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (!it.value().is_number())
                throw ProblemFileError("key \"params\": value for \"" + it.key() +
                                       "\" must be a number");
            lp.params[it.key()] = it.value().get<double>();
        }
    }
    for (const auto& [name, value] : param_overrides) lp.params[name] = value;

    const bool differential =
        lp.spec.kind == ProblemKind::Vide || lp.spec.kind == ProblemKind::NlVide;
    const bool nonlinear =
        lp.spec.kind == ProblemKind::NlVie || lp.spec.kind == ProblemKind::NlVide;

    expr::Expr kernel = parse_field(doc, "kernel");
    check_scope(kernel, "kernel", {"x", "y"}, lp.params);
    expr::Expr g = parse_field(doc, "g");
    check_scope(g, "g", {"x"}, lp.params);

    expr::Expr f;
    if (doc.contains("f")) {
        if (!nonlinear)
            throw ProblemFileError("key \"f\" is only valid for nonlinear kinds");
        f = parse_field(doc, "f");
        check_scope(f, "f", {"y", "u"}, lp.params);
    } else if (nonlinear) {
        f = expr::parse("u");
    }

    if (!doc.at("n").is_number_integer() || doc.at("n").get<long>() < 1)
        throw ProblemFileError("key \"n\": expected a positive integer");
    lp.spec.n = doc.at("n").get<long>();

    if (doc.contains("kernel_degree")) {
        if (!doc.at("kernel_degree").is_number_integer())
            throw ProblemFileError("key \"kernel_degree\": expected an integer");
        lp.spec.kernel_degree = doc.at("kernel_degree").get<int>();
    }

    if (differential) {
        if (!doc.contains("lambdas"))
            throw ProblemFileError("missing required key \"lambdas\" for kind vide/nl_vide");
        if (!doc.contains("ics"))
            throw ProblemFileError("missing required key \"ics\" for kind vide/nl_vide");
        lp.spec.lambdas = real_array(doc, "lambdas");
        lp.spec.ics = real_array(doc, "ics");
        if (lp.spec.lambdas.empty() || lp.spec.lambdas.back() == 0.0)
            throw ProblemFileError("key \"lambdas\": leading coefficient must be nonzero");
        if (lp.spec.ics.size() + 1 != lp.spec.lambdas.size())
            throw ProblemFileError("key \"ics\": expected one value per derivative order (" +
                                   std::to_string(lp.spec.lambdas.size() - 1) + ")");
    } else {
        if (doc.contains("lambdas"))
            throw ProblemFileError("key \"lambdas\" is only valid for vide kinds");
        if (doc.contains("ics"))
            throw ProblemFileError("key \"ics\" is only valid for vide kinds");
    }

    if (doc.contains("solution")) {
        lp.solution = parse_field(doc, "solution");
        check_scope(lp.solution, "solution", {"x"}, lp.params);
    }
    if (doc.contains("guess")) {
        if (!nonlinear)
            throw ProblemFileError("key \"guess\" is only valid for nonlinear kinds");
        lp.guess = parse_field(doc, "guess");
        check_scope(lp.guess, "guess", {"x"}, lp.params);
    }

    // bind the expressions into callables, capturing the parameter values
    const std::map<std::string, double> params = lp.params;
    lp.spec.kernel = [kernel, params](double x, double y) {
        std::map<std::string, double> b = params;
        b["x"] = x;
        b["y"] = y;
        return kernel.eval(b);
    };
    lp.spec.g = [g, params](double x) {
        std::map<std::string, double> b = params;
        b["x"] = x;
        return g.eval(b);
    };
    if (nonlinear) {
        lp.spec.f = [f, params](double y, double u) {
            std::map<std::string, double> b = params;
            b["y"] = y;
            b["u"] = u;
            return f.eval(b);
        };
        const int power = detect_power(f);
        lp.spec.f_is_identity = (power == 1);
        lp.spec.f_power = power;
    }
    return lp;
}

LoadedProblem load_problem(const std::string& path,
                           const std::map<std::string, double>& param_overrides) {
    std::ifstream in(path);
    if (!in) throw ProblemFileError("cannot open problem file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem(buf.str(), param_overrides);
}

}  // namespace volterra::problemfile
