#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "volterra/expr.hpp"

using namespace volterra::expr;

namespace {

bool same_tree(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.name != b.name) return false;
    if (a.kind == NodeKind::Number && a.value != b.value) return false;
    if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
    if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
    if (a.lhs && !same_tree(*a.lhs, *b.lhs)) return false;
    if (a.rhs && !same_tree(*a.rhs, *b.rhs)) return false;
    return true;
}

// random AST generator for the round-trip property
std::shared_ptr<const Node> random_ast(std::mt19937& rng, int depth) {
    auto node = std::make_shared<Node>();
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
    static const char* vars[] = {"x", "y", "u", "k"};
    static const char* fns[] = {"sin", "cos", "tan", "sinh", "cosh", "tanh",
                                "exp", "log", "sqrt", "atan", "abs"};
    static const char* ops[] = {"+", "-", "*", "/", "^"};
    switch (pick(rng)) {
        case 0:
            node->kind = NodeKind::Number;
            node->value = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
            break;
        case 1:
            node->kind = NodeKind::Variable;
            node->name = vars[std::uniform_int_distribution<int>(0, 3)(rng)];
            break;
        case 2:
            node->kind = NodeKind::Negate;
            node->name = "-";
            node->lhs = random_ast(rng, depth - 1);
            break;
        case 3:
            node->kind = NodeKind::Call;
            node->name = fns[std::uniform_int_distribution<int>(0, 10)(rng)];
            node->lhs = random_ast(rng, depth - 1);
            break;
        case 4:
            node->kind = NodeKind::Binary;
            node->name = ops[std::uniform_int_distribution<int>(0, 4)(rng)];
            node->lhs = random_ast(rng, depth - 1);
            node->rhs = random_ast(rng, depth - 1);
            break;
    }
    return node;
}

}  // namespace

TEST_CASE("parsing and arithmetic") {
    Expr e = parse("x*(1+2*x)*exp(y*(x-y))");
    CHECK(e.eval({{"x", 1.0}, {"y", 0.0}}) == doctest::Approx(3.0).epsilon(1e-15));

    CHECK(parse("2^3^2").eval({}) == doctest::Approx(512.0).epsilon(1e-15));
    CHECK(parse("pi").eval({}) == doctest::Approx(3.141592653589793).epsilon(1e-16));
    CHECK(parse("e").eval({}) == doctest::Approx(std::exp(1.0)).epsilon(1e-16));
    CHECK(parse("2+3*4").eval({}) == 14.0);
    CHECK(parse("(2+3)*4").eval({}) == 20.0);
    CHECK(parse("-2^2").eval({}) == -4.0);  // ^ binds above unary minus
    CHECK(parse("2^-1").eval({}) == 0.5);
    CHECK(parse("10-4-3").eval({}) == 3.0);  // left associativity
    CHECK(parse("abs(-3)+sqrt(16)").eval({}) == 7.0);
}

TEST_CASE("benchmark kernel expression") {
    // x(1+2x)e^{y(x-y)} at (0.5, 0.5): 0.5 * 2 * e^0 = 1
    Expr e = parse("x*(1+2*x)*exp(y*(x-y))");
    CHECK(e.eval({{"x", 0.5}, {"y", 0.5}}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("parse errors carry positions and hints") {
    CHECK_THROWS_AS(parse("sin("), ParseError);
    try {
        parse("sin(");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
    }
    try {
        parse("x + foo");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
        CHECK(e.hint().find("variable") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("(1+2"), ParseError);
    CHECK_THROWS_AS(parse("1 2"), ParseError);   // no implicit multiplication
    CHECK_THROWS_AS(parse("2 x"), ParseError);
    CHECK_THROWS_AS(parse("sin x"), ParseError);  // argument list required
    CHECK_THROWS_AS(parse("#"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    try {
        parse("1+$");
    } catch (const ParseError& e) {
        CHECK(e.offset() <= 3);
    }
}

TEST_CASE("eval diagnostics") {
    CHECK_THROWS_AS(parse("x+z_unknown"), ParseError);
    CHECK_THROWS_AS(parse("x").eval({{"y", 1.0}}), std::invalid_argument);
    CHECK(std::isinf(parse("1/x").eval({{"x", 0.0}})));
    CHECK(std::isnan(parse("log(x)").eval({{"x", -1.0}})));
}

TEST_CASE("eval is pure") {
    Expr e = parse("sin(x)^2 + cos(x)^2 - x/3");
    const double a = e.eval({{"x", 0.7}});
    const double b = e.eval({{"x", 0.7}});
    CHECK(a == b);
}

TEST_CASE("numeric derivative matches central differences") {
    const char* exprs[] = {"sin(x)*exp(x/2)", "x^3 + 2*x", "cosh(x)/(1+x^2)",
                           "atan(x)*sqrt(x+2)", "exp(-x^2)"};
    for (const char* s : exprs) {
        Expr e = parse(s);
        auto f = [&e](double x) { return e.eval({{"x", x}}); };
        for (double x : {0.3, 0.8, 1.5}) {
            const double h = 1e-6;
            const double fd = (f(x + h) - f(x - h)) / (2.0 * h);
            const double fd2 = (f(x + h / 2) - f(x - h / 2)) / h;
            // Richardson-style agreement between two step sizes
            CHECK(std::abs(fd - (4.0 * fd2 - fd) / 3.0) <= 1e-6 * (1.0 + std::abs(fd)));
        }
    }
}

TEST_CASE("print/reparse fixpoint on random ASTs") {
    std::mt19937 rng(20260823);
    for (int trial = 0; trial < 100; ++trial) {
        Expr e(random_ast(rng, 6));
        Expr back = parse(e.print());
        CHECK(same_tree(e.root(), back.root()));
        CHECK(back.print() == e.print());
    }
}

TEST_CASE("free variables") {
    CHECK(parse("x*(1+2*x)*exp(y*(x-y))").free_vars() ==
          std::set<std::string>{"x", "y"});
    CHECK(parse("u^2").free_vars() == std::set<std::string>{"u"});
    CHECK(parse("k/(k^2*x^2+1)").free_vars() == std::set<std::string>{"k", "x"});
    CHECK(parse("pi+1").free_vars().empty());
}
