#include "volterra/jacobi.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include <Eigen/Eigenvalues>

namespace volterra::jacobi {

namespace {

// Guard against the removable s = alpha+beta degeneracies outside our
// parameter range of interest.
void check_denominator(double d) {
    if (std::abs(d) < 1e-12)
        throw std::invalid_argument("jacobi: degenerate recurrence denominator");
}

// Shifted-domain three-term coefficients: x*P~_n = c*P~_{n-1} + a*P~_n + b*P~_{n+1}.
Recurrence shifted_rec(int n, const BasisTag& basis) {
    const Recurrence r = recurrence_coeffs(n, basis);
    return {(r.a + 1.0) / 2.0, r.b / 2.0, r.c / 2.0};
}

}  // namespace

Recurrence recurrence_coeffs(int n, const BasisTag& basis) {
    validate(basis);
    if (n < 0) throw std::invalid_argument("recurrence_coeffs: n < 0");
    const double al = basis.alpha, be = basis.beta, s = al + be;
    if (n == 0) {
        check_denominator(s + 2.0);
        return {(be - al) / (s + 2.0), 2.0 / (s + 2.0), 0.0};
    }
    const double k = 2.0 * n + s;
    check_denominator(k);
    check_denominator(k + 1.0);
    check_denominator(k + 2.0);
    const double a = (be * be - al * al) / (k * (k + 2.0));
    const double b = 2.0 * (n + 1.0) * (n + s + 1.0) / ((k + 1.0) * (k + 2.0));
    const double c = 2.0 * (n + al) * (n + be) / (k * (k + 1.0));
    return {a, b, c};
}

double weight_mass(const BasisTag& basis) {
    validate(basis);
    return std::exp(std::lgamma(basis.alpha + 1.0) + std::lgamma(basis.beta + 1.0) -
                    std::lgamma(basis.alpha + basis.beta + 2.0));
}

double squared_norm(int n, const BasisTag& basis) {
    validate(basis);
    const double s = basis.alpha + basis.beta;
    return std::exp(std::lgamma(n + basis.alpha + 1.0) + std::lgamma(n + basis.beta + 1.0) -
                    std::lgamma(n + 1.0) - std::lgamma(n + s + 1.0)) /
           (2.0 * n + s + 1.0);
}

double eval_poly(int n, const BasisTag& basis, double x) {
    if (n == 0) return 1.0;
    double pm = 1.0;
    Recurrence r0 = shifted_rec(0, basis);
    double p = (x - r0.a) / r0.b;
    for (int k = 1; k < n; ++k) {
        const Recurrence r = shifted_rec(k, basis);
        const double pn = ((x - r.a) * p - r.c * pm) / r.b;
        pm = p;
        p = pn;
    }
    return p;
}

double clenshaw_eval(const CoeffVec& f, double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("clenshaw_eval: point outside [0,1]");
    const Index n = f.coeffs.size();
    if (n == 0) return 0.0;
    double u1 = 0.0, u2 = 0.0;
    for (Index k = n - 1; k >= 0; --k) {
        const Recurrence rk = shifted_rec(static_cast<int>(k), f.basis);
        const Recurrence rk1 = shifted_rec(static_cast<int>(k) + 1, f.basis);
        const double u = f.coeffs[k] + (x - rk.a) / rk.b * u1 - rk1.c / rk1.b * u2;
        u2 = u1;
        u1 = u;
    }
    return u1;
}

const QuadratureRule& gauss_rule(const BasisTag& basis, int m) {
    validate(basis);
    if (m < 1) throw std::invalid_argument("gauss_rule: m must be >= 1");

    using Key = std::tuple<double, double, int>;
    static std::map<Key, std::unique_ptr<QuadratureRule>> cache;
    static std::mutex mtx;

    const Key key{basis.alpha, basis.beta, m};
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    Vector diag(m), sub(std::max(m - 1, 0));
    for (int k = 0; k < m; ++k) {
        const Recurrence rk = shifted_rec(k, basis);
        diag[k] = rk.a;
        if (k + 1 < m) {
            const Recurrence rk1 = shifted_rec(k + 1, basis);
            sub[k] = std::sqrt(rk.b * rk1.c);
        }
    }
    Eigen::SelfAdjointEigenSolver<linalg::DenseMatrix> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

    auto rule = std::make_unique<QuadratureRule>();
    rule->basis = basis;
    rule->nodes = es.eigenvalues();
    rule->weights.resize(m);

    // Polish the eigenvalue nodes with a few Newton steps on the degree-m
    // orthonormal polynomial; the raw eigenvalues carry O(m*eps) error that
    // otherwise caps the accuracy of high-order transforms.
    for (int i = 0; i < m && m > 1; ++i) {
        double x = rule->nodes[i];
        for (int it = 0; it < 3; ++it) {
            double qm = 0.0, q = 1.0, dqm = 0.0, dq = 0.0;
            for (int k = 0; k < m; ++k) {
                const double em = (k > 0) ? sub[k - 1] : 0.0;
                const double ek = (k + 1 < m) ? sub[k] : 1.0;
                const double qn = ((x - diag[k]) * q - em * qm) / ek;
                const double dqn = (q + (x - diag[k]) * dq - em * dqm) / ek;
                qm = q;
                q = qn;
                dqm = dq;
                dq = dqn;
            }
            if (dq == 0.0) break;
            const double dx = q / dq;
            x -= dx;
            if (std::abs(dx) < 1e-16 * std::abs(x) + 1e-300) break;
        }
        rule->nodes[i] = x;
    }

    // Christoffel weights: w_i = 1 / sum_k q_k(x_i)^2 with q_k orthonormal.
    const double mu0 = weight_mass(basis);
    for (int i = 0; i < m; ++i) {
        const double x = rule->nodes[i];
        double qm = 0.0, q = 1.0 / std::sqrt(mu0), sum = q * q;
        for (int k = 0; k + 1 < m; ++k) {
            const double em = (k > 0) ? sub[k - 1] : 0.0;
            const double qn = ((x - diag[k]) * q - em * qm) / sub[k];
            qm = q;
            q = qn;
            sum += q * q;
        }
        rule->weights[i] = 1.0 / sum;
    }

    auto [pos, inserted] = cache.emplace(key, std::move(rule));
    return *pos->second;
}

CoeffVec analysis(const Vector& values_at_nodes, const QuadratureRule& rule) {
    const Index m = rule.size();
    if (values_at_nodes.size() != m)
        throw std::invalid_argument("analysis: values/nodes size mismatch");
    Vector coeffs = Vector::Zero(m);
    // Forward recurrence over all nodes at once, one degree per sweep.
    Vector pm = Vector::Zero(m), p = Vector::Ones(m);
    const Vector wv = rule.weights.cwiseProduct(values_at_nodes);
    for (int k = 0; k < m; ++k) {
        coeffs[k] = wv.dot(p) / squared_norm(k, rule.basis);
        const Recurrence r = shifted_rec(k, rule.basis);
        Vector pn = ((rule.nodes.array() - r.a) * p.array() - r.c * pm.array()) / r.b;
        pm = p;
        p = pn;
    }
    return {rule.basis, coeffs};
}

Vector synthesis(const CoeffVec& f, const QuadratureRule& rule) {
    if (f.basis != rule.basis)
        throw std::invalid_argument("synthesis: basis mismatch");
    const Index n = f.coeffs.size();
    if (n > rule.size())
        throw std::invalid_argument("synthesis: rule too small for coefficient count");
    const Index m = rule.size();
    Vector out = Vector::Zero(m);
    Vector pm = Vector::Zero(m), p = Vector::Ones(m);
    for (Index k = 0; k < n; ++k) {
        out += f.coeffs[k] * p;
        const Recurrence r = shifted_rec(static_cast<int>(k), f.basis);
        Vector pn = ((rule.nodes.array() - r.a) * p.array() - r.c * pm.array()) / r.b;
        pm = p;
        p = pn;
    }
    return out;
}

CoeffVec expand(const std::function<double(double)>& f, const BasisTag& basis, int n) {
    if (n < 1) throw std::invalid_argument("expand: n must be >= 1");
    const QuadratureRule& rule = gauss_rule(basis, std::max(2 * n + 16, n));
    Vector vals(rule.size());
    for (Index i = 0; i < rule.size(); ++i) vals[i] = f(rule.nodes[i]);
    if (!vals.allFinite())
        throw std::runtime_error("expand: non-finite function value at quadrature node");
    CoeffVec full = analysis(vals, rule);
    return {basis, full.coeffs.head(n)};
}

BandedMatrix jacobi_matrix_x(const BasisTag& basis, Index n) {
    BandedMatrix x(n, n, 1, 1);
    for (Index i = 0; i < n; ++i) {
        const Recurrence ri = shifted_rec(static_cast<int>(i), basis);
        x.at(i, i) = ri.a;
        if (i > 0) x.at(i, i - 1) = shifted_rec(static_cast<int>(i) - 1, basis).b;
        if (i + 1 < n) x.at(i, i + 1) = shifted_rec(static_cast<int>(i) + 1, basis).c;
    }
    return x;
}

namespace {

// One-parameter raising step (alpha -> alpha+1 or beta -> beta+1).
BandedMatrix raising_step(const BasisTag& from, bool raise_alpha, Index n) {
    const double s = from.alpha + from.beta;
    BandedMatrix out(n, n, 0, 1);
    for (Index i = 0; i < n; ++i) {
        check_denominator(2.0 * i + s + 1.0);
        out.at(i, i) = (i + s + 1.0) / (2.0 * i + s + 1.0);
        if (i + 1 < n) {
            const double num = raise_alpha ? (i + 1.0 + from.beta) : (i + 1.0 + from.alpha);
            const double val = num / (2.0 * (i + 1.0) + s + 1.0);
            out.at(i, i + 1) = raise_alpha ? -val : val;
        }
    }
    return out;
}

}  // namespace

BandedMatrix raising_op(const BasisTag& from, const BasisTag& to, Index n) {
    validate(from);
    validate(to);
    const double da = to.alpha - from.alpha;
    const double db = to.beta - from.beta;
    auto integral = [](double d) { return d >= -1e-9 && std::abs(d - std::round(d)) < 1e-9; };
    if (!integral(da) || !integral(db))
        throw std::invalid_argument("raising_op: increments must be nonnegative integers");
    BandedMatrix out = BandedMatrix::identity(n);
    BasisTag cur = from;
    for (int k = 0; k < static_cast<int>(std::round(da)); ++k) {
        out = band_mul_band(raising_step(cur, true, n), out);
        cur.alpha += 1.0;
    }
    for (int k = 0; k < static_cast<int>(std::round(db)); ++k) {
        out = band_mul_band(raising_step(cur, false, n), out);
        cur.beta += 1.0;
    }
    return out;
}

BasisTag lowered_basis(const BasisTag& from, Weight w) {
    BasisTag to = from;
    if (w == Weight::OneMinusX)
        to.alpha -= 1.0;
    else
        to.beta -= 1.0;
    if (!(to.alpha > -1.0) || !(to.beta > -1.0))
        throw std::invalid_argument("lowering_op: parameter underflow");
    return to;
}

BandedMatrix lowering_op(const BasisTag& from, Weight w, Index n) {
    validate(from);
    lowered_basis(from, w);  // underflow check
    const double a = from.alpha, b = from.beta;
    BandedMatrix out(n, n, 1, 0);
    for (Index i = 0; i < n; ++i) {
        const double denom = 2.0 * i + a + b + 1.0;
        check_denominator(denom);
        if (w == Weight::OneMinusX) {
            out.at(i, i) = (i + a) / denom;
            if (i + 1 < n) out.at(i + 1, i) = -(i + 1.0) / denom;
        } else {
            out.at(i, i) = (i + b) / denom;
            if (i + 1 < n) out.at(i + 1, i) = (i + 1.0) / denom;
        }
    }
    return out;
}

BandedMatrix reflection_op(Index n) {
    BandedMatrix out(n, n, 0, 0);
    for (Index i = 0; i < n; ++i) out.at(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
    return out;
}

BandedMatrix derivative_op(const BasisTag& basis, int order, Index n) {
    validate(basis);
    if (order < 1) throw std::invalid_argument("derivative_op: order must be >= 1");
    BandedMatrix out = BandedMatrix::identity(n);
    BasisTag cur = basis;
    for (int m = 0; m < order; ++m) {
        BandedMatrix step(n, n, 0, 1);
        // d/dx P~_{j+1} = (j+1 + alpha+beta+1) P~_j in the raised basis; the
        // factor 2 from the chain rule is already folded in.
        for (Index j = 0; j + 1 < n; ++j)
            step.at(j, j + 1) = j + cur.alpha + cur.beta + 2.0;
        out = band_mul_band(step, out);
        cur.alpha += 1.0;
        cur.beta += 1.0;
    }
    return out;
}

Vector eval_functional(const BasisTag& basis, int endpoint, Index n) {
    validate(basis);
    if (endpoint != 0 && endpoint != 1)
        throw std::invalid_argument("eval_functional: endpoint must be 0 or 1");
    Vector row(n);
    double v = 1.0;
    for (Index j = 0; j < n; ++j) {
        row[j] = v;
        if (endpoint == 1)
            v *= (basis.alpha + j + 1.0) / (j + 1.0);
        else
            v *= -(basis.beta + j + 1.0) / (j + 1.0);
    }
    return row;
}

BandedMatrix multiplication_op(const CoeffVec& w, Index target_n) {
    const Index len = w.coeffs.size();
    Index deg = -1;
    const double cutoff = 1e-15 * (len > 0 ? w.coeffs.cwiseAbs().maxCoeff() : 0.0);
    for (Index k = 0; k < len; ++k)
        if (std::abs(w.coeffs[k]) > cutoff) deg = k;
    if (deg < 0) return BandedMatrix(target_n, target_n, 0, 0);
    if (deg == 0) return band_scale(w.coeffs[0], BandedMatrix::identity(target_n));

    const Index p = target_n + deg + 4;
    const BandedMatrix x = jacobi_matrix_x(w.basis, p);
    const BandedMatrix id = BandedMatrix::identity(p);

    // Clenshaw in the matrix argument: u_k = w_k I + a_k(X) u_{k+1} - g_{k+1} u_{k+2}.
    BandedMatrix u1(p, p, 0, 0), u2(p, p, 0, 0);
    for (Index k = deg; k >= 0; --k) {
        const Recurrence rk = shifted_rec(static_cast<int>(k), w.basis);
        const Recurrence rk1 = shifted_rec(static_cast<int>(k) + 1, w.basis);
        BandedMatrix u = band_add(band_scale(w.coeffs[k], id),
                                  band_scale(1.0 / rk.b,
                                             band_mul_band(band_add(x, band_scale(-rk.a, id)), u1)));
        u = band_add(u, band_scale(-rk1.c / rk1.b, u2));
        u2 = u1;
        u1 = u;
    }
    return u1.top_left(target_n, target_n).trimmed(1e-15);
}

}  // namespace volterra::jacobi
