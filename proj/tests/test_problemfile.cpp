#include <doctest.h>

#include <cmath>

#include "volterra/problemfile.hpp"

using namespace volterra::problemfile;
using volterra::solver::ProblemKind;

TEST_CASE("valid second-kind file") {
    LoadedProblem lp = parse_problem(R"json({
        "kind": "vie2",
        "kernel": "x - y",
        "g": "1 + x^2",
        "n": 20
    })json");
    CHECK(lp.spec.kind == ProblemKind::Vie2);
    CHECK(lp.spec.n == 20);
    CHECK(lp.spec.kernel(0.75, 0.25) == doctest::Approx(0.5));
    CHECK(lp.spec.g(2.0) == doctest::Approx(5.0));
    CHECK(!lp.solution.valid());
    CHECK(!lp.nonlinear());
    CHECK(!lp.differential());
}

TEST_CASE("vide file with lambdas, ics, and solution") {
    LoadedProblem lp = parse_problem(R"json({
        "kind": "vide",
        "kernel": "x - y",
        "g": "1",
        "lambdas": [0, 0, 1],
        "ics": [1, 0],
        "n": 30,
        "solution": "cosh(x)"
    })json");
    CHECK(lp.differential());
    CHECK(lp.spec.lambdas == std::vector<double>{0.0, 0.0, 1.0});
    CHECK(lp.spec.ics == std::vector<double>{1.0, 0.0});
    CHECK(lp.solution.valid());
    CHECK(lp.solution.eval({{"x", 1.0}}) == doctest::Approx(std::cosh(1.0)));
}

TEST_CASE("params substitution and overrides") {
    const std::string text = R"json({
        "kind": "vie2",
        "kernel": "y*exp(k*x)",
        "g": "atan(k*x)",
        "n": 10,
        "params": {"k": 2}
    })json";
    LoadedProblem lp = parse_problem(text);
    CHECK(lp.spec.g(1.0) == doctest::Approx(std::atan(2.0)));
    LoadedProblem over = parse_problem(text, {{"k", 5.0}});
    CHECK(over.spec.g(1.0) == doctest::Approx(std::atan(5.0)));
    CHECK(over.params.at("k") == 5.0);
}

TEST_CASE("nonlinearity defaults and power detection") {
    LoadedProblem cubic = parse_problem(R"json({
        "kind": "nl_vie", "kernel": "x", "g": "0", "f": "u^3", "n": 10
    })json");
    CHECK(cubic.spec.f_power == 3);
    CHECK(!cubic.spec.f_is_identity);
    CHECK(cubic.spec.f(0.0, 2.0) == doctest::Approx(8.0));

    LoadedProblem ident = parse_problem(R"json({
        "kind": "nl_vie", "kernel": "x", "g": "0", "n": 10
    })json");
    CHECK(ident.spec.f_is_identity);
    CHECK(ident.spec.f_power == 1);
    CHECK(ident.spec.f(0.0, 3.5) == doctest::Approx(3.5));

    LoadedProblem general = parse_problem(R"json({
        "kind": "nl_vie", "kernel": "x", "g": "0", "f": "sin(u)+y", "n": 10
    })json");
    CHECK(general.spec.f_power == 0);
    CHECK(general.spec.f(0.5, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("schema violations are rejected with the key named") {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        try {
            parse_problem(text);
            FAIL("expected ProblemFileError for: ", text);
        } catch (const ProblemFileError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    // ics required iff differential kind
    expect_error(R"json({"kind":"vide","kernel":"1","g":"1","lambdas":[1,1],"n":10})json", "ics");
    expect_error(R"json({"kind":"nl_vide","kernel":"1","g":"1","lambdas":[1,1],"n":10})json", "ics");
    expect_error(R"json({"kind":"vie2","kernel":"1","g":"1","ics":[1],"n":10})json", "ics");

    expect_error(R"json({"kind":"vide","kernel":"1","g":"1","ics":[1],"n":10})json", "lambdas");
    expect_error(R"json({"kind":"vide","kernel":"1","g":"1","lambdas":[1,0],"ics":[1],"n":10})json",
                 "lambdas");
    expect_error(R"json({"kind":"vide","kernel":"1","g":"1","lambdas":[0,1],"ics":[1,2],"n":10})json",
                 "ics");

    expect_error(R"json({"kernel":"1","g":"1","n":10})json", "kind");
    expect_error(R"json({"kind":"banana","kernel":"1","g":"1","n":10})json", "kind");
    expect_error(R"json({"kind":"vie2","g":"1","n":10})json", "kernel");
    expect_error(R"json({"kind":"vie2","kernel":"1","n":10})json", "\"g\"");
    expect_error(R"json({"kind":"vie2","kernel":"1","g":"1","n":-3})json", "\"n\"");
    expect_error(R"json({"kind":"vie2","kernel":"1","g":"1","n":10,"extra":1})json", "extra");
    expect_error(R"json({"kind":"vie2","kernel":"1","g":"1","n":10,"f":"u"})json", "\"f\"");
    expect_error("not json at all", "JSON");

    // expression-level failures surface the field
    expect_error(R"json({"kind":"vie2","kernel":"sin(","g":"1","n":10})json", "kernel");
    // variable scoping per field
    expect_error(R"json({"kind":"vie2","kernel":"u","g":"1","n":10})json", "kernel");
    expect_error(R"json({"kind":"vie2","kernel":"x","g":"y","n":10})json", "\"g\"");
    expect_error(R"json({"kind":"nl_vie","kernel":"x","g":"0","f":"x*u","n":10})json", "\"f\"");
}

TEST_CASE("load_problem reads from disk") {
    CHECK_THROWS_AS(load_problem("/nonexistent/file.json"), ProblemFileError);
}
