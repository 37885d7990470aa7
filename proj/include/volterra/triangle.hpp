#pragma once

#include <functional>

#include "volterra/jacobi.hpp"

namespace volterra::triangle {

using jacobi::BasisTag;
using linalg::DenseMatrix;
using linalg::Index;
using linalg::Vector;

/// Proriol basis on the triangle T^2 = {0 <= x, 0 <= y, x + y <= 1},
/// orthogonal with respect to x^alpha y^beta (1-x-y)^gamma.
struct TriangleBasisTag {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    bool operator==(const TriangleBasisTag&) const = default;
};

void validate(const TriangleBasisTag& b);

/// Flat position of the entry (n, k), k <= n, in the lexicographic
/// degree-block layout.
inline Index flat_index(int n, int k) { return static_cast<Index>(n) * (n + 1) / 2 + k; }
inline Index flat_size(int degree) {
    return static_cast<Index>(degree + 1) * (degree + 2) / 2;
}

/// Coefficients f_{n,k} through total degree `degree`, stored flat; block n
/// occupies positions flat_index(n,0) .. flat_index(n,n).
struct TriangleCoeffs {
    TriangleBasisTag basis;
    int degree = 0;
    Vector flat;
};

/// Tensor quadrature on T^2 built from the Duffy map (x, s) -> (x, (1-x)s);
/// integrates polynomials of total degree <= exactness against the basis
/// weight.
struct TriangleQuadrature {
    TriangleBasisTag basis;
    int exactness = 0;
    Vector x, y, weights;  // flattened tensor grid
    Index size() const { return x.size(); }
};

TriangleQuadrature duffy_rule(const TriangleBasisTag& basis, int exactness);

/// P_{k,n}(x,y) = (1-x)^k P~_{n-k}^{(2k+beta+gamma+1, alpha)}(x)
///              * P~_k^{(gamma,beta)}(y/(1-x)); the x=1 limit is resolved.
double proriol_eval(int k, int n, const TriangleBasisTag& basis, double x, double y);

/// Squared weighted L^2 norm of P_{k,n} over T^2 (closed form).
double proriol_norm(int k, int n, const TriangleBasisTag& basis);

/// Coefficients of f through total degree N by quadrature inner products.
TriangleCoeffs triangle_analysis(const std::function<double(double, double)>& f,
                                 const TriangleBasisTag& basis, int degree);

/// Pointwise synthesis of a coefficient set.
double triangle_eval(const TriangleCoeffs& f, double x, double y);

/// Multiplication-by-x and multiplication-by-y operators on flat
/// coefficients through degree N; both are block tridiagonal in the
/// degree-block partition. Output coefficients live in degree N, so the
/// action is exact only on inputs of degree <= N-1.
struct BlockJacobiOps {
    DenseMatrix jx, jy;
};
BlockJacobiOps block_jacobi_ops(const TriangleBasisTag& basis, int degree);

/// E_y: coefficients of u in P~^{(1,0)} (size N+1) to the (0,0,0) triangle
/// coefficients of the extension u~(x,y) = u(y).
DenseMatrix extension_op(int degree);

/// Q_y: row n selects f_{n,0}, giving the P~^{(1,0)} coefficients c_n with
/// integral_0^{1-x} f(x,y) dy = (1-x) * sum_n c_n P~_n^{(1,0)}(x); the (1-x)
/// weight is factored out and handled by the caller.
DenseMatrix qy_op(int degree);

/// Diagonal of D_y = Q_y * E_y; throws if the product fails to be diagonal
/// to working precision.
Vector dy_diagonal(int degree);

}  // namespace volterra::triangle
