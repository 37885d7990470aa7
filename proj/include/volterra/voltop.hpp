#pragma once

#include "volterra/triangle.hpp"

namespace volterra::voltop {

using jacobi::BandedMatrix;
using linalg::DenseMatrix;
using linalg::Index;
using linalg::Vector;

/// Triangle expansion of the flipped kernel K(1-x, y) in the (0,0,0) basis.
struct KernelExpansion {
    triangle::TriangleCoeffs coeffs;
    int degree = 0;
    /// max |coefficient| in the top two degree blocks relative to the overall
    /// max; above 1e-14 the kernel is under-resolved at this degree.
    double tail_ratio = 0.0;
    bool resolved() const { return tail_ratio <= 1e-14; }
};

/// Expand a kernel to total degree d; d < 0 grows the degree automatically
/// until the relative tail drops below 1e-13 (capped at 64).
KernelExpansion expand_kernel(const std::function<double(double, double)>& K, int d = -1);

/// Banded realization of u |-> integral_0^x K(x,y) u(y) dy on shifted Jacobi
/// coefficients. `raw` is the weight-free operator on the flipped domain;
/// `composed` maps P~^{(1,0)} coefficients of u to P~^{(1,0)} coefficients of
/// the integral.
struct VolterraOperator {
    BandedMatrix raw;
    BandedMatrix composed;
    int kernel_degree = 0;
};

VolterraOperator assemble_volterra(const KernelExpansion& ke, Index n);

/// Brute-force quadrature construction of the composed operator, column by
/// column, used as an independent check on the banded assembly.
DenseMatrix oracle_volterra(const std::function<double(double, double)>& K, Index n);

struct BandwidthReport {
    Index lower = 0, upper = 0, nnz = 0;
};

/// Smallest band containing all entries >= tol * max|entry| of the composed
/// operator, and the count of such entries.
BandwidthReport bandwidth_report(const VolterraOperator& v, double tol);

}  // namespace volterra::voltop
