#pragma once

#include <functional>
#include <memory>

#include "volterra/linalg.hpp"

namespace volterra::jacobi {

using linalg::BandedMatrix;
using linalg::Index;
using linalg::Vector;

/// Shifted Jacobi basis P~_n^(alpha,beta)(x) = P_n^(alpha,beta)(2x-1) on [0,1],
/// orthogonal with respect to (1-x)^alpha x^beta.
struct BasisTag {
    double alpha = 0.0;
    double beta = 0.0;

    bool operator==(const BasisTag&) const = default;
};

inline void validate(const BasisTag& b) {
    if (!(b.alpha > -1.0) || !(b.beta > -1.0))
        throw std::invalid_argument("BasisTag: parameters must be > -1");
}

/// Coefficient vector in a tagged shifted Jacobi basis; index = degree.
struct CoeffVec {
    BasisTag basis;
    Vector coeffs;
};

struct QuadratureRule {
    BasisTag basis;
    Vector nodes;    // in (0,1)
    Vector weights;  // positive, sum = Beta(beta+1, alpha+1)
    Index size() const { return nodes.size(); }
};

/// Coefficients of t*P_n = c*P_{n-1} + a*P_n + b*P_{n+1} on the natural
/// domain t in [-1,1]. The shifted operator is (J + I)/2.
struct Recurrence {
    double a, b, c;
};

Recurrence recurrence_coeffs(int n, const BasisTag& basis);

/// L2([0,1], (1-x)^a x^b) squared norm of P~_n.
double squared_norm(int n, const BasisTag& basis);

/// Total weight mass Beta(beta+1, alpha+1).
double weight_mass(const BasisTag& basis);

/// P~_n evaluated at x in [0,1] by forward recurrence.
double eval_poly(int n, const BasisTag& basis, double x);

/// Clenshaw evaluation of a coefficient vector; rejects x outside [0,1].
double clenshaw_eval(const CoeffVec& f, double x);

/// Gauss-Jacobi rule on [0,1] (Golub-Welsch nodes, Christoffel weights).
/// Rules are memoized; the returned reference stays valid for the process
/// lifetime and is safe to use from concurrent readers.
const QuadratureRule& gauss_rule(const BasisTag& basis, int m);

/// Discrete transforms. analysis expects values at the nodes of `rule` and
/// returns rule.size() coefficients; synthesis evaluates at the nodes.
CoeffVec analysis(const Vector& values_at_nodes, const QuadratureRule& rule);
Vector synthesis(const CoeffVec& f, const QuadratureRule& rule);

/// Expand a function into n coefficients, oversampling the quadrature to
/// suppress aliasing for non-polynomial inputs.
CoeffVec expand(const std::function<double(double)>& f, const BasisTag& basis, int n);

/// Tridiagonal multiplication-by-x operator on coefficients (n x n).
BandedMatrix jacobi_matrix_x(const BasisTag& basis, Index n);

/// Conversion (alpha,beta) -> (alpha+da, beta+db) for nonnegative integer
/// increments; upper-triangular with upper_bw = da+db.
BandedMatrix raising_op(const BasisTag& from, const BasisTag& to, Index n);

enum class Weight { X, OneMinusX };

/// Basis reached by the weighted lowering: weight (1-x) lowers alpha,
/// weight x lowers beta.
BasisTag lowered_basis(const BasisTag& from, Weight w);

/// Lower-bidiagonal operator: synthesizing the output in lowered_basis(from,w)
/// equals weight(x) * f(x) pointwise.
BandedMatrix lowering_op(const BasisTag& from, Weight w, Index n);

/// Diagonal (-1)^n map; output coefficients are interpreted in (beta,alpha)
/// and synthesize to f(1-x).
BandedMatrix reflection_op(Index n);

/// m-th derivative operator (alpha,beta) -> (alpha+m,beta+m), built as the
/// product of m distinct single-step operators.
BandedMatrix derivative_op(const BasisTag& basis, int order, Index n);

/// Endpoint evaluation functional as a row vector; endpoint is 0 or 1.
Vector eval_functional(const BasisTag& basis, int endpoint, Index n);

/// Banded operator whose action equals pointwise multiplication by w,
/// built by Clenshaw recurrence in the multiplication-by-x matrix.
BandedMatrix multiplication_op(const CoeffVec& w, Index target_n);

}  // namespace volterra::jacobi
