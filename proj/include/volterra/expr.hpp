#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>

namespace volterra::expr {

/// Lexer/parser failure with the byte offset of the offending token and a
/// hint describing what was expected there.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, size_t offset, std::string hint)
        : std::runtime_error(message + " at offset " + std::to_string(offset) +
                             (hint.empty() ? "" : " (expected " + hint + ")")),
          offset_(offset),
          hint_(std::move(hint)) {}
    size_t offset() const { return offset_; }
    const std::string& hint() const { return hint_; }

private:
    size_t offset_;
    std::string hint_;
};

enum class NodeKind { Number, Variable, Negate, Binary, Call };

struct Node {
    NodeKind kind;
    double value = 0.0;        // Number
    std::string name;          // Variable / Call function / Binary operator
    std::shared_ptr<const Node> lhs, rhs;  // Negate/Call use lhs only
};

/// Immutable expression tree. Copies share structure.
class Expr {
public:
    Expr() = default;
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

    bool valid() const { return root_ != nullptr; }
    const Node& root() const;

    double eval(const std::map<std::string, double>& bindings) const;
    std::string print() const;
    std::set<std::string> free_vars() const;

private:
    std::shared_ptr<const Node> root_;
};

/// Parse the expression language: variables x, y, u, k; constants pi, e;
/// functions sin cos tan sinh cosh tanh exp log sqrt atan abs; operators
/// ^ (right) above unary - above * / above + -. No implicit multiplication.
Expr parse(const std::string& src);

}  // namespace volterra::expr
