#include "volterra/expr.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

namespace volterra::expr {

namespace {

const std::set<std::string> kVariables = {"x", "y", "u", "k"};
const std::map<std::string, double> kConstants = {
    {"pi", 3.14159265358979323846}, {"e", 2.71828182845904523536}};
const std::map<std::string, double (*)(double)> kFunctions = {
    {"sin", std::sin},   {"cos", std::cos},   {"tan", std::tan},
    {"sinh", std::sinh}, {"cosh", std::cosh}, {"tanh", std::tanh},
    {"exp", std::exp},   {"log", std::log},   {"sqrt", std::sqrt},
    {"atan", std::atan}, {"abs", std::fabs}};

struct Token {
    enum Kind { Number, Ident, Op, LParen, RParen, End } kind;
    size_t offset;
    double value = 0.0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }
    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        cur_.offset = pos_;
        if (pos_ >= src_.size()) {
            cur_.kind = Token::End;
            cur_.text = "end of input";
            return;
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            const char* begin = src_.c_str() + pos_;
            char* end = nullptr;
            cur_.value = std::strtod(begin, &end);
            cur_.kind = Token::Number;
            cur_.text.assign(begin, static_cast<size_t>(end - begin));
            pos_ += static_cast<size_t>(end - begin);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                          src_[pos_] == '_'))
                ++pos_;
            cur_.kind = Token::Ident;
            cur_.text = src_.substr(start, pos_ - start);
            return;
        }
        cur_.text = std::string(1, c);
        ++pos_;
        switch (c) {
            case '(': cur_.kind = Token::LParen; return;
            case ')': cur_.kind = Token::RParen; return;
            case '+': case '-': case '*': case '/': case '^':
                cur_.kind = Token::Op;
                return;
            default:
                throw ParseError("unexpected character '" + cur_.text + "'", cur_.offset,
                                 "an operator, number, or identifier");
        }
    }

    const std::string& src_;
    size_t pos_ = 0;
    Token cur_;
};

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Number;
    n->value = v;
    return n;
}

NodePtr make_node(NodeKind kind, std::string name, NodePtr lhs, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->name = std::move(name);
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    NodePtr parse_expression() {
        NodePtr e = parse_additive();
        const Token& t = lex_.peek();
        if (t.kind != Token::End)
            throw ParseError("trailing input '" + t.text + "'", t.offset, "end of input");
        return e;
    }

private:
    NodePtr parse_additive() {
        NodePtr lhs = parse_multiplicative();
        while (lex_.peek().kind == Token::Op &&
               (lex_.peek().text == "+" || lex_.peek().text == "-")) {
            const std::string op = lex_.take().text;
            lhs = make_node(NodeKind::Binary, op, lhs, parse_multiplicative());
        }
        return lhs;
    }

    NodePtr parse_multiplicative() {
        NodePtr lhs = parse_unary();
        while (lex_.peek().kind == Token::Op &&
               (lex_.peek().text == "*" || lex_.peek().text == "/")) {
            const std::string op = lex_.take().text;
            lhs = make_node(NodeKind::Binary, op, lhs, parse_unary());
        }
        return lhs;
    }

    NodePtr parse_unary() {
        if (lex_.peek().kind == Token::Op && lex_.peek().text == "-") {
            lex_.take();
            return make_node(NodeKind::Negate, "-", parse_unary());
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (lex_.peek().kind == Token::Op && lex_.peek().text == "^") {
            lex_.take();
            // right-associative; the exponent may carry its own unary minus
            return make_node(NodeKind::Binary, "^", base, parse_unary_power());
        }
        return base;
    }

    NodePtr parse_unary_power() {
        if (lex_.peek().kind == Token::Op && lex_.peek().text == "-") {
            lex_.take();
            return make_node(NodeKind::Negate, "-", parse_unary_power());
        }
        return parse_power();
    }

    NodePtr parse_atom() {
        Token t = lex_.take();
        switch (t.kind) {
            case Token::Number:
                return make_number(t.value);
            case Token::LParen: {
                NodePtr inner = parse_additive();
                const Token& close = lex_.peek();
                if (close.kind != Token::RParen)
                    throw ParseError("unbalanced parenthesis", close.offset, "')'");
                lex_.take();
                return inner;
            }
            case Token::Ident: {
                if (kFunctions.count(t.text)) {
                    const Token& open = lex_.peek();
                    if (open.kind != Token::LParen)
                        throw ParseError("function '" + t.text + "' needs an argument list",
                                         open.offset, "'('");
                    lex_.take();
                    NodePtr arg = parse_additive();
                    const Token& close = lex_.peek();
                    if (close.kind != Token::RParen)
                        throw ParseError("unbalanced parenthesis", close.offset, "')'");
                    lex_.take();
                    return make_node(NodeKind::Call, t.text, arg);
                }
                if (kConstants.count(t.text)) return make_number(kConstants.at(t.text));
                if (kVariables.count(t.text)) {
                    auto n = std::make_shared<Node>();
                    n->kind = NodeKind::Variable;
                    n->name = t.text;
                    return n;
                }
                throw ParseError("unknown identifier '" + t.text + "'", t.offset,
                                 "a variable (x, y, u, k), constant, or function name");
            }
            default:
                throw ParseError("unexpected '" + t.text + "'", t.offset,
                                 "a number, variable, function call, or '('");
        }
    }

    Lexer lex_;
};

double eval_node(const Node& n, const std::map<std::string, double>& bindings) {
    switch (n.kind) {
        case NodeKind::Number:
            return n.value;
        case NodeKind::Variable: {
            auto it = bindings.find(n.name);
            if (it == bindings.end())
                throw std::invalid_argument("eval: unbound variable '" + n.name + "'");
            return it->second;
        }
        case NodeKind::Negate:
            return -eval_node(*n.lhs, bindings);
        case NodeKind::Call:
            return kFunctions.at(n.name)(eval_node(*n.lhs, bindings));
        case NodeKind::Binary: {
            const double a = eval_node(*n.lhs, bindings);
            const double b = eval_node(*n.rhs, bindings);
            switch (n.name[0]) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                case '^': return std::pow(a, b);
            }
            break;
        }
    }
    throw std::logic_error("eval: malformed expression node");
}

void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
        case NodeKind::Number: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.value);
            out += buf;
            return;
        }
        case NodeKind::Variable:
            out += n.name;
            return;
        case NodeKind::Negate:
            out += "(-";
            print_node(*n.lhs, out);
            out += ')';
            return;
        case NodeKind::Call:
            out += n.name;
            out += '(';
            print_node(*n.lhs, out);
            out += ')';
            return;
        case NodeKind::Binary:
            out += '(';
            print_node(*n.lhs, out);
            out += n.name;
            print_node(*n.rhs, out);
            out += ')';
            return;
    }
}

void collect_vars(const Node& n, std::set<std::string>& vars) {
    switch (n.kind) {
        case NodeKind::Variable: vars.insert(n.name); return;
        case NodeKind::Number: return;
        case NodeKind::Negate:
        case NodeKind::Call: collect_vars(*n.lhs, vars); return;
        case NodeKind::Binary:
            collect_vars(*n.lhs, vars);
            collect_vars(*n.rhs, vars);
            return;
    }
}

}  // namespace

const Node& Expr::root() const {
    if (!root_) throw std::logic_error("Expr: empty expression");
    return *root_;
}

double Expr::eval(const std::map<std::string, double>& bindings) const {
    return eval_node(root(), bindings);
}

std::string Expr::print() const {
    std::string out;
    print_node(root(), out);
    return out;
}

std::set<std::string> Expr::free_vars() const {
    std::set<std::string> vars;
    collect_vars(root(), vars);
    return vars;
}

Expr parse(const std::string& src) {
    Parser p(src);
    return Expr(p.parse_expression());
}

}  // namespace volterra::expr
