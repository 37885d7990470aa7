#include "volterra/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace volterra::solver {

using jacobi::BasisTag;
using linalg::band_add;
using linalg::band_mul_band;
using linalg::band_mul_vec;
using linalg::band_scale;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

Index checked_order(const ProblemSpec& p) {
    if (p.lambdas.empty() || p.lambdas.back() == 0.0)
        throw std::invalid_argument("solver: lambdas must be nonempty with nonzero leading term");
    const Index m = static_cast<Index>(p.lambdas.size()) - 1;
    if (static_cast<Index>(p.ics.size()) != m)
        throw std::invalid_argument("solver: a VIDE of order " + std::to_string(m) + " requires " +
                                    std::to_string(m) + " initial conditions");
    return m;
}

voltop::VolterraOperator assemble(const ProblemSpec& p) {
    return voltop::assemble_volterra(voltop::expand_kernel(p.kernel, p.kernel_degree), p.n);
}

// rough infinity-norm condition estimate from a few banded solves
double estimate_condition(const BandedMatrix& a) {
    double norm_a = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        double row = 0.0;
        const Index j0 = std::max<Index>(0, i - a.lower_bw());
        const Index j1 = std::min(a.cols() - 1, i + a.upper_bw());
        for (Index j = j0; j <= j1; ++j) row += std::abs(a(i, j));
        norm_a = std::max(norm_a, row);
    }
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double norm_inv = 0.0;
    for (int t = 0; t < 3; ++t) {
        Vector b(a.rows());
        for (Index i = 0; i < b.size(); ++i) b[i] = dist(rng);
        try {
            Vector x = linalg::banded_solve(a, b);
            norm_inv = std::max(norm_inv, x.lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>());
        } catch (const linalg::SingularMatrixError&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return norm_a * norm_inv;
}

// Shared assembly of the differential and Volterra blocks in the range basis
// P~^{(1+M,M)}; the Volterra block acts on f(u) in the nonlinear kinds.
struct SystemParts {
    Index m = 0;
    BandedMatrix lin;    // sum_m lambda_m S D_m
    BandedMatrix vol;    // S R L V_K
    DenseMatrix toprows;  // boundary evaluation functionals E_0 D_m
    Vector ics;
    Vector gc;  // forcing coefficients in the range basis
};

SystemParts build_parts(const ProblemSpec& p, const voltop::VolterraOperator& v) {
    const Index n = p.n;
    SystemParts parts;
    parts.m = checked_order(p);
    const Index m = parts.m;
    const BasisTag range{1.0 + m, static_cast<double>(m)};

    parts.lin = BandedMatrix(n, n, 0, 0);
    for (Index d = 0; d <= m; ++d) {
        if (p.lambdas[d] == 0.0) continue;
        const BasisTag from{1.0 + d, static_cast<double>(d)};
        BandedMatrix term = jacobi::raising_op(from, range, n);
        if (d > 0) term = band_mul_band(term, jacobi::derivative_op({1.0, 0.0}, static_cast<int>(d), n));
        parts.lin = band_add(parts.lin, band_scale(p.lambdas[d], term));
    }
    parts.vol = band_mul_band(jacobi::raising_op({1.0, 0.0}, range, n), v.composed);

    parts.toprows = DenseMatrix(m, n);
    for (Index d = 0; d < m; ++d) {
        if (d == 0) {
            parts.toprows.row(0) = jacobi::eval_functional({1.0, 0.0}, 0, n).transpose();
        } else {
            const BandedMatrix dm = jacobi::derivative_op({1.0, 0.0}, static_cast<int>(d), n);
            const Vector e0 = jacobi::eval_functional({1.0 + d, static_cast<double>(d)}, 0, n);
            parts.toprows.row(d) = band_mul_vec(dm.transpose(), e0).transpose();
        }
    }
    parts.ics = Eigen::Map<const Vector>(p.ics.data(), m);
    parts.gc = jacobi::expand(p.g, range, static_cast<int>(n)).coeffs;
    return parts;
}

}  // namespace

VideSystem build_vide_operator(const ProblemSpec& p, const voltop::VolterraOperator& v) {
    const Index n = p.n;
    SystemParts parts = build_parts(p, v);
    const Index m = parts.m;

    VideSystem sys;
    sys.order = m;
    sys.body = band_add(parts.lin, band_scale(-1.0, parts.vol));

    const Index lb = sys.body.lower_bw(), ub = sys.body.upper_bw();
    BandedMatrix band(n, n, std::min(lb + m, n - 1), std::max<Index>(ub - m, 0));
    for (Index i = m; i < n; ++i) {
        const Index j0 = std::max<Index>(0, i - band.lower_bw());
        const Index j1 = std::min(n - 1, i + band.upper_bw());
        for (Index j = j0; j <= j1; ++j) band.at(i, j) = sys.body(i - m, j);
    }
    sys.a = AlmostBandedMatrix{band, m, parts.toprows};
    sys.rhs.resize(n);
    sys.rhs.head(m) = parts.ics;
    sys.rhs.tail(n - m) = parts.gc.head(n - m);
    return sys;
}

SolveReport solve_vie_first_kind(const ProblemSpec& p) {
    const Stopwatch clock;
    const voltop::VolterraOperator v = assemble(p);
    // The flipped first-kind forcing g(1-x)/(1-x) is sampled at interior
    // Gauss nodes, so the endpoint is never evaluated.
    const CoeffVec q = jacobi::expand([&p](double x) { return p.g(1.0 - x) / (1.0 - x); },
                                      {1.0, 0.0}, static_cast<int>(p.n));
    SolveReport rep;
    rep.condition_estimate = estimate_condition(v.raw);
    rep.ill_conditioned = !(rep.condition_estimate <= 1e10);
    Vector u = linalg::banded_solve(v.raw, q.coeffs);
    rep.u = {{1.0, 0.0}, u};
    rep.residual_norm = (band_mul_vec(v.raw, u) - q.coeffs).norm();
    rep.band_lower = v.raw.lower_bw();
    rep.band_upper = v.raw.upper_bw();
    rep.wall_time = clock.seconds();
    return rep;
}

SolveReport solve_vie_second_kind(const ProblemSpec& p) {
    const Stopwatch clock;
    const voltop::VolterraOperator v = assemble(p);
    const BandedMatrix a =
        band_add(BandedMatrix::identity(p.n), band_scale(-1.0, v.composed));
    const CoeffVec g = jacobi::expand(p.g, {1.0, 0.0}, static_cast<int>(p.n));
    Vector u = linalg::banded_solve(a, g.coeffs);
    SolveReport rep;
    rep.u = {{1.0, 0.0}, u};
    rep.residual_norm = (band_mul_vec(a, u) - g.coeffs).norm();
    rep.band_lower = a.lower_bw();
    rep.band_upper = a.upper_bw();
    rep.wall_time = clock.seconds();
    return rep;
}

SolveReport solve_vide_linear(const ProblemSpec& p) {
    const Stopwatch clock;
    const voltop::VolterraOperator v = assemble(p);
    const VideSystem sys = build_vide_operator(p, v);
    Vector u = linalg::almost_banded_solve(sys.a, sys.rhs);
    SolveReport rep;
    rep.u = {{1.0, 0.0}, u};
    rep.residual_norm = (sys.a.apply(u) - sys.rhs).norm();
    rep.band_lower = sys.a.band.lower_bw();
    rep.band_upper = sys.a.band.upper_bw();
    rep.dense_rows = sys.order;
    for (Index m = 0; m < sys.order; ++m)
        rep.ic_residuals.push_back(std::abs(sys.a.top_block.row(m).dot(u) - p.ics[m]));
    rep.wall_time = clock.seconds();
    return rep;
}

CoeffVec compose_nonlinearity(const std::function<double(double, double)>& f, const CoeffVec& u) {
    const Index len = u.coeffs.size();
    const int m = static_cast<int>(std::max(2 * len, len + 16));
    const jacobi::QuadratureRule& rule = jacobi::gauss_rule(u.basis, m);
    const Vector vals = jacobi::synthesis(u, rule);
    Vector fv(m);
    for (int i = 0; i < m; ++i) {
        fv[i] = f(rule.nodes[i], vals[i]);
        if (!std::isfinite(fv[i]))
            throw std::runtime_error("compose_nonlinearity: non-finite value at node");
    }
    CoeffVec out = jacobi::analysis(fv, rule);
    out.coeffs.conservativeResize(len);
    return out;
}

namespace {

SystemParts nonlinear_parts(const ProblemSpec& p, const voltop::VolterraOperator& v) {
    if (p.kind == ProblemKind::NlVide || p.kind == ProblemKind::Vide) return build_parts(p, v);
    SystemParts parts;  // second-kind layout: u - V f(u) = g
    parts.m = 0;
    parts.lin = BandedMatrix::identity(p.n);
    parts.vol = v.composed;
    parts.toprows = DenseMatrix(0, p.n);
    parts.ics = Vector(0);
    parts.gc = jacobi::expand(p.g, {1.0, 0.0}, static_cast<int>(p.n)).coeffs;
    return parts;
}

Vector residual_from_parts(const SystemParts& parts, const ProblemSpec& p, const Vector& u) {
    const Index n = u.size();
    CoeffVec uc{{1.0, 0.0}, u};
    const Vector fu =
        p.f_is_identity ? u : compose_nonlinearity(p.f, uc).coeffs;
    const Vector body = band_mul_vec(parts.lin, u) - band_mul_vec(parts.vol, fu) - parts.gc;
    Vector out(n);
    out.head(parts.m) = parts.toprows * u - parts.ics;
    out.tail(n - parts.m) = body.head(n - parts.m);
    if (!out.allFinite()) throw std::runtime_error("nonlinear_residual: non-finite residual");
    return out;
}

}  // namespace

Vector nonlinear_residual(const ProblemSpec& p, const CoeffVec& u) {
    const voltop::VolterraOperator v = assemble(p);
    return residual_from_parts(nonlinear_parts(p, v), p, u.coeffs);
}

SolveReport solve_nonlinear(const ProblemSpec& p, const NewtonConfig& cfg, const Vector& guess) {
    const Stopwatch clock;
    if (guess.size() != p.n)
        throw std::invalid_argument("solve_nonlinear: guess length must equal n");
    if (!(cfg.step_tol > 0.0) || !(cfg.resid_tol > 0.0))
        throw std::invalid_argument("solve_nonlinear: tolerances must be positive");
    const voltop::VolterraOperator v = assemble(p);
    const SystemParts parts = nonlinear_parts(p, v);
    const Index n = p.n, m = parts.m;

    Vector u = guess;
    Vector f = residual_from_parts(parts, p, u);
    std::vector<double> history{f.norm()};
    int iters = 0;

    const bool analytic =
        p.f_is_identity || (cfg.use_analytic_power_jacobian && p.f_power >= 1);
    while (true) {
        if (history.back() <= cfg.resid_tol) break;
        if (iters >= cfg.max_iter)
            throw NewtonNonConvergence(
                "solve_nonlinear: no convergence after " + std::to_string(cfg.max_iter) +
                    " iterations (residual " + std::to_string(history.back()) + ")",
                history);

        DenseMatrix jac(n, n);
        if (analytic) {
            BandedMatrix dfu = BandedMatrix::identity(n);
            if (!p.f_is_identity) {
                CoeffVec upow = compose_nonlinearity(
                    [&p](double, double val) { return std::pow(val, p.f_power - 1); },
                    CoeffVec{{1.0, 0.0}, u});
                dfu = band_scale(static_cast<double>(p.f_power),
                                 jacobi::multiplication_op(upow, n));
            }
            const BandedMatrix body =
                band_add(parts.lin, band_scale(-1.0, band_mul_band(parts.vol, dfu)));
            jac.topRows(m) = parts.toprows;
            jac.bottomRows(n - m) = body.to_dense().topRows(n - m);
        } else {
            const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
            for (Index i = 0; i < n; ++i) {
                const double h = sqrt_eps * std::max(1.0, std::abs(u[i]));
                Vector up = u;
                up[i] += h;
                jac.col(i) = (residual_from_parts(parts, p, up) - f) / h;
            }
        }

        const Vector du = linalg::dense_solve(jac, -f);
        u += du;
        ++iters;
        f = residual_from_parts(parts, p, u);
        history.push_back(f.norm());
        if (du.lpNorm<Eigen::Infinity>() <= cfg.step_tol) break;
    }

    SolveReport rep;
    rep.u = {{1.0, 0.0}, u};
    rep.residual_norm = history.back();
    rep.residual_history = history;
    rep.newton_iters = iters;
    rep.band_lower = parts.vol.lower_bw();
    rep.band_upper = std::max(parts.vol.upper_bw(), parts.lin.upper_bw());
    rep.dense_rows = m;
    for (Index d = 0; d < m; ++d)
        rep.ic_residuals.push_back(std::abs(parts.toprows.row(d).dot(u) - p.ics[d]));
    rep.wall_time = clock.seconds();
    return rep;
}

}  // namespace volterra::solver
