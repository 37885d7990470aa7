#include "volterra/triangle.hpp"

#include <cmath>

namespace volterra::triangle {

namespace {

// Univariate factor rules of the Duffy tensor product: the x-direction
// absorbs the Jacobian together with the y-weights, the s-direction carries
// the weights of the scaled y variable.
jacobi::BasisTag x_rule_basis(const TriangleBasisTag& b) {
    return {b.beta + b.gamma + 1.0, b.alpha};
}
jacobi::BasisTag s_rule_basis(const TriangleBasisTag& b) { return {b.gamma, b.beta}; }

int points_for_exactness(int exactness) { return exactness / 2 + 1; }

void check_point(double x, double y) {
    const double tol = 1e-10;
    if (x < -tol || y < -tol || x + y > 1.0 + tol)
        throw std::domain_error("triangle: point outside T^2");
}

}  // namespace

void validate(const TriangleBasisTag& b) {
    if (!(b.alpha > -1.0) || !(b.beta > -1.0) || !(b.gamma > -1.0))
        throw std::invalid_argument("TriangleBasisTag: parameters must be > -1");
}

TriangleQuadrature duffy_rule(const TriangleBasisTag& basis, int exactness) {
    validate(basis);
    const int m = points_for_exactness(std::max(exactness, 0));
    const jacobi::QuadratureRule& rx = jacobi::gauss_rule(x_rule_basis(basis), m);
    const jacobi::QuadratureRule& rs = jacobi::gauss_rule(s_rule_basis(basis), m);

    TriangleQuadrature q;
    q.basis = basis;
    q.exactness = 2 * m - 1;
    q.x.resize(m * m);
    q.y.resize(m * m);
    q.weights.resize(m * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Index p = static_cast<Index>(i) * m + j;
            q.x[p] = rx.nodes[i];
            q.y[p] = (1.0 - rx.nodes[i]) * rs.nodes[j];
            q.weights[p] = rx.weights[i] * rs.weights[j];
        }
    return q;
}

double proriol_eval(int k, int n, const TriangleBasisTag& basis, double x, double y) {
    validate(basis);
    if (k < 0 || k > n) throw std::invalid_argument("proriol_eval: need 0 <= k <= n");
    check_point(x, y);
    const double omx = 1.0 - x;
    if (omx <= 1e-14 && k > 0) return 0.0;  // (1-x)^k kills the removable singularity
    const double s = omx <= 1e-14 ? 0.0 : std::clamp(y / omx, 0.0, 1.0);
    const jacobi::BasisTag xb{2.0 * k + basis.beta + basis.gamma + 1.0, basis.alpha};
    const jacobi::BasisTag sb{basis.gamma, basis.beta};
    return std::pow(omx, k) * jacobi::eval_poly(n - k, xb, std::clamp(x, 0.0, 1.0)) *
           jacobi::eval_poly(k, sb, s);
}

double proriol_norm(int k, int n, const TriangleBasisTag& basis) {
    validate(basis);
    if (k < 0 || k > n) throw std::invalid_argument("proriol_norm: need 0 <= k <= n");
    const jacobi::BasisTag xb{2.0 * k + basis.beta + basis.gamma + 1.0, basis.alpha};
    const jacobi::BasisTag sb{basis.gamma, basis.beta};
    return jacobi::squared_norm(n - k, xb) * jacobi::squared_norm(k, sb);
}

TriangleCoeffs triangle_analysis(const std::function<double(double, double)>& f,
                                 const TriangleBasisTag& basis, int degree) {
    validate(basis);
    if (degree < 0) throw std::invalid_argument("triangle_analysis: negative degree");
    const int m = points_for_exactness(2 * degree + 4);
    const jacobi::QuadratureRule& rx = jacobi::gauss_rule(x_rule_basis(basis), m);
    const jacobi::QuadratureRule& rs = jacobi::gauss_rule(s_rule_basis(basis), m);

    DenseMatrix fv(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double val = f(rx.nodes[i], (1.0 - rx.nodes[i]) * rs.nodes[j]);
            if (!std::isfinite(val))
                throw std::runtime_error("triangle_analysis: non-finite value at quadrature node");
            fv(i, j) = val;
        }

    TriangleCoeffs out{basis, degree, Vector::Zero(flat_size(degree))};
    // Collapse the tensor grid one k at a time: first the s-direction against
    // P~_k^{(gamma,beta)}, then the x-direction against the k-dependent family.
    Vector omx_pow = Vector::Ones(m);
    for (int k = 0; k <= degree; ++k) {
        Vector sk(m);
        for (int j = 0; j < m; ++j)
            sk[j] = rs.weights[j] * jacobi::eval_poly(k, s_rule_basis(basis), rs.nodes[j]);
        const Vector g = fv * sk;  // g[i] = sum_j w_j P~_k(s_j) f(x_i, y_ij)

        const jacobi::BasisTag xb{2.0 * k + basis.beta + basis.gamma + 1.0, basis.alpha};
        Vector pm = Vector::Zero(m), p = Vector::Ones(m);
        for (int d = 0; k + d <= degree; ++d) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += rx.weights[i] * omx_pow[i] * p[i] * g[i];
            out.flat[flat_index(k + d, k)] = acc / proriol_norm(k, k + d, basis);
            const jacobi::Recurrence r = jacobi::recurrence_coeffs(d, xb);
            const double a = (r.a + 1.0) / 2.0, b = r.b / 2.0, c = r.c / 2.0;
            Vector pn = ((rx.nodes.array() - a) * p.array() - c * pm.array()) / b;
            pm = p;
            p = pn;
        }
        for (int i = 0; i < m; ++i) omx_pow[i] *= 1.0 - rx.nodes[i];
    }
    return out;
}

double triangle_eval(const TriangleCoeffs& f, double x, double y) {
    check_point(x, y);
    double acc = 0.0;
    for (int n = 0; n <= f.degree; ++n)
        for (int k = 0; k <= n; ++k) {
            const double c = f.flat[flat_index(n, k)];
            if (c != 0.0) acc += c * proriol_eval(k, n, f.basis, x, y);
        }
    return acc;
}

BlockJacobiOps block_jacobi_ops(const TriangleBasisTag& basis, int degree) {
    validate(basis);
    const TriangleQuadrature q = duffy_rule(basis, 2 * degree + 4);
    const Index dim = flat_size(degree);

    DenseMatrix p(dim, q.size());
    for (int n = 0; n <= degree; ++n)
        for (int k = 0; k <= n; ++k)
            for (Index t = 0; t < q.size(); ++t)
                p(flat_index(n, k), t) = proriol_eval(k, n, basis, q.x[t], q.y[t]);

    Vector hinv(dim);
    for (int n = 0; n <= degree; ++n)
        for (int k = 0; k <= n; ++k)
            hinv[flat_index(n, k)] = 1.0 / proriol_norm(k, n, basis);

    const DenseMatrix pwx = p * q.weights.cwiseProduct(q.x).asDiagonal();
    const DenseMatrix pwy = p * q.weights.cwiseProduct(q.y).asDiagonal();
    BlockJacobiOps ops;
    ops.jx = hinv.asDiagonal() * (pwx * p.transpose());
    ops.jy = hinv.asDiagonal() * (pwy * p.transpose());
    return ops;
}

DenseMatrix extension_op(int degree) {
    const TriangleBasisTag tb{};
    DenseMatrix e(flat_size(degree), degree + 1);
    for (int j = 0; j <= degree; ++j) {
        TriangleCoeffs col = triangle_analysis(
            [j](double, double y) { return jacobi::eval_poly(j, {1.0, 0.0}, y); }, tb, degree);
        e.col(j) = col.flat;
    }
    return e;
}

DenseMatrix qy_op(int degree) {
    DenseMatrix q = DenseMatrix::Zero(degree + 1, flat_size(degree));
    for (int n = 0; n <= degree; ++n) q(n, flat_index(n, 0)) = 1.0;
    return q;
}

Vector dy_diagonal(int degree) {
    const DenseMatrix d = qy_op(degree) * extension_op(degree);
    DenseMatrix off = d;
    off.diagonal().setZero();
    if (off.cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff()))
        throw std::runtime_error("dy_diagonal: Q_y * E_y is not diagonal");
    return d.diagonal();
}

}  // namespace volterra::triangle
