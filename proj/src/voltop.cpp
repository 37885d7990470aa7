#include "volterra/voltop.hpp"

#include <cmath>

namespace volterra::voltop {

using jacobi::BasisTag;
using linalg::band_add;
using linalg::band_mul_band;
using linalg::band_scale;

namespace {

double tail_ratio_of(const triangle::TriangleCoeffs& c) {
    const double overall = c.flat.cwiseAbs().maxCoeff();
    if (overall == 0.0) return 0.0;
    double tail = 0.0;
    for (int n = std::max(c.degree - 1, 0); n <= c.degree; ++n)
        for (int k = 0; k <= n; ++k)
            tail = std::max(tail, std::abs(c.flat[triangle::flat_index(n, k)]));
    return tail / overall;
}

KernelExpansion expand_at(const std::function<double(double, double)>& K, int d) {
    KernelExpansion ke;
    ke.coeffs = triangle::triangle_analysis(
        [&K](double x, double y) { return K(1.0 - x, y); }, {}, d);
    ke.degree = d;
    // drop quadrature noise so the tail diagnostic reflects genuine
    // truncation error rather than the roundoff floor of the transform
    // (node accuracy amplified by high-degree polynomial values)
    const double cutoff = 1e-13 * ke.coeffs.flat.cwiseAbs().maxCoeff();
    for (Index i = 0; i < ke.coeffs.flat.size(); ++i)
        if (std::abs(ke.coeffs.flat[i]) < cutoff) ke.coeffs.flat[i] = 0.0;
    ke.tail_ratio = tail_ratio_of(ke.coeffs);
    return ke;
}

// p(X) for a polynomial given by coefficients in a shifted Jacobi basis,
// evaluated by Clenshaw with a banded matrix argument.
BandedMatrix poly_in_matrix(const Vector& coeffs, const BasisTag& basis, const BandedMatrix& x) {
    const Index p = x.rows();
    const BandedMatrix id = BandedMatrix::identity(p);
    BandedMatrix u1(p, p, 0, 0), u2(p, p, 0, 0);
    for (Index k = coeffs.size() - 1; k >= 0; --k) {
        const jacobi::Recurrence rn = jacobi::recurrence_coeffs(static_cast<int>(k), basis);
        const jacobi::Recurrence rn1 = jacobi::recurrence_coeffs(static_cast<int>(k) + 1, basis);
        const double a = (rn.a + 1.0) / 2.0, b = rn.b / 2.0;
        const double c1 = rn1.c / 2.0, b1 = rn1.b / 2.0;
        BandedMatrix u = band_add(band_scale(coeffs[k], id),
                                  band_scale(1.0 / b, band_mul_band(band_add(x, band_scale(-a, id)), u1)));
        u = band_add(u, band_scale(-c1 / b1, u2));
        u2 = u1;
        u1 = u;
    }
    return u1;
}

}  // namespace

KernelExpansion expand_kernel(const std::function<double(double, double)>& K, int d) {
    if (d >= 0) return expand_at(K, d);
    KernelExpansion ke;
    for (int deg = 8; deg <= 64; deg += 8) {
        ke = expand_at(K, deg);
        if (ke.tail_ratio < 1e-13) return ke;
    }
    return ke;
}

VolterraOperator assemble_volterra(const KernelExpansion& ke, Index n) {
    if (n < 1) throw std::invalid_argument("assemble_volterra: n must be >= 1");
    const int d = ke.degree;
    const Index m = n + 2 * d + 8;
    const BasisTag out_basis{1.0, 0.0};

    const BandedMatrix x = jacobi::jacobi_matrix_x(out_basis, m);
    const BandedMatrix id = BandedMatrix::identity(m);
    const BandedMatrix omx = band_add(id, band_scale(-1.0, x));          // I - X
    const BandedMatrix omx2 = band_mul_band(omx, omx);

    // The flipped kernel splits as sum_k R_k(x) * q_k(x,y), where q_k is the
    // degree-elevated Legendre factor of the Proriol basis. Pushing the
    // integral and extension through that split turns the whole bivariate
    // multiplication into univariate matrices:
    //   V = sum_k R_k(X) G_k,  G_k = Q_y M_{q_k} E_y,
    // with G_0 the diagonal Q_y E_y and the three-term recurrence of q_k
    // giving G_{k+1} = A_k G_k X + B_k (I-X) G_k - C_k (I-X)^2 G_{k-1}.
    BandedMatrix g_prev(m, m, 0, 0);  // G_{k-1}
    BandedMatrix g(m, m, 0, 0);       // G_k
    for (Index j = 0; j < m; ++j) g.at(j, j) = (j % 2 == 0 ? 1.0 : -1.0) / (j + 1.0);

    BandedMatrix acc(m, m, 0, 0);
    for (int k = 0; k <= d; ++k) {
        Vector rk(d - k + 1);
        for (int deg = 0; deg + k <= d; ++deg)
            rk[deg] = ke.coeffs.flat[triangle::flat_index(deg + k, k)];
        if (rk.cwiseAbs().maxCoeff() > 0.0) {
            const BasisTag kb{2.0 * k + 1.0, 0.0};
            acc = band_add(acc, band_mul_band(poly_in_matrix(rk, kb, x), g));
        }
        if (k == d) break;
        const double ak = 2.0 * (2.0 * k + 1.0) / (k + 1.0);
        const double bk = -(2.0 * k + 1.0) / (k + 1.0);
        const double ck = static_cast<double>(k) / (k + 1.0);
        BandedMatrix g_next = band_add(band_scale(ak, band_mul_band(g, x)),
                                       band_scale(bk, band_mul_band(omx, g)));
        if (k > 0) g_next = band_add(g_next, band_scale(-ck, band_mul_band(omx2, g_prev)));
        g_prev = g;
        g = g_next;
    }

    // Undo the domain flip: lower out the (1-x) weight, reflect, and raise
    // back into the (1,0) range space.
    const BandedMatrix low = jacobi::lowering_op(out_basis, jacobi::Weight::OneMinusX, m);
    const BandedMatrix refl = jacobi::reflection_op(m);
    const BandedMatrix raise = jacobi::raising_op({0.0, 0.0}, out_basis, m);
    const BandedMatrix composed = band_mul_band(raise, band_mul_band(refl, band_mul_band(low, acc)));

    VolterraOperator v;
    v.raw = acc.top_left(n, n).trimmed(1e-14);
    v.composed = composed.top_left(n, n).trimmed(1e-14);
    v.kernel_degree = d;
    return v;
}

DenseMatrix oracle_volterra(const std::function<double(double, double)>& K, Index n) {
    const BasisTag basis{1.0, 0.0};
    const int outer = static_cast<int>(n) + 8;
    const int inner = static_cast<int>(n) + 16;
    const jacobi::QuadratureRule& rx = jacobi::gauss_rule(basis, outer);
    const jacobi::QuadratureRule& leg = jacobi::gauss_rule({0.0, 0.0}, inner);

    // integrals(i, j) = integral_0^{x_i} K(x_i, y) P~_j(y) dy by the mapped
    // interior rule y = x_i t.
    DenseMatrix integrals(outer, n);
    for (int i = 0; i < outer; ++i) {
        const double xi = rx.nodes[i];
        Vector kv(inner);
        for (int l = 0; l < inner; ++l) kv[l] = leg.weights[l] * K(xi, xi * leg.nodes[l]);
        Vector pm = Vector::Zero(inner), p = Vector::Ones(inner);
        for (Index j = 0; j < n; ++j) {
            integrals(i, j) = xi * kv.dot(p);
            const jacobi::Recurrence r = jacobi::recurrence_coeffs(static_cast<int>(j), basis);
            const double a = (r.a + 1.0) / 2.0, b = r.b / 2.0, c = r.c / 2.0;
            Vector pn = ((xi * leg.nodes.array() - a) * p.array() - c * pm.array()) / b;
            pm = p;
            p = pn;
        }
    }

    DenseMatrix out(n, n);
    for (Index j = 0; j < n; ++j) {
        jacobi::CoeffVec col = jacobi::analysis(integrals.col(j), rx);
        out.col(j) = col.coeffs.head(n);
    }
    return out;
}

BandwidthReport bandwidth_report(const VolterraOperator& v, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("bandwidth_report: tol must be positive");
    const BandedMatrix& c = v.composed;
    const double cutoff = tol * c.max_abs();
    BandwidthReport rep;
    if (c.max_abs() == 0.0) return rep;
    for (Index j = 0; j < c.cols(); ++j) {
        const Index i0 = std::max<Index>(0, j - c.upper_bw());
        const Index i1 = std::min(c.rows() - 1, j + c.lower_bw());
        for (Index i = i0; i <= i1; ++i)
            if (std::abs(c(i, j)) >= cutoff) {
                rep.lower = std::max(rep.lower, i - j);
                rep.upper = std::max(rep.upper, j - i);
                ++rep.nnz;
            }
    }
    return rep;
}

}  // namespace volterra::voltop
