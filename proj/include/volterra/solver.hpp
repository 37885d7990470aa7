#pragma once

#include "volterra/voltop.hpp"

namespace volterra::solver {

using jacobi::CoeffVec;
using linalg::AlmostBandedMatrix;
using linalg::BandedMatrix;
using linalg::DenseMatrix;
using linalg::Index;
using linalg::Vector;

enum class ProblemKind { Vie1, Vie2, Vide, NlVie, NlVide };

struct ProblemSpec {
    ProblemKind kind = ProblemKind::Vie2;
    std::function<double(double, double)> kernel;  // K(x,y)
    std::function<double(double)> g;
    /// nonlinearity f(y, u); ignored unless kind is nonlinear
    std::function<double(double, double)> f;
    bool f_is_identity = true;
    /// exponent when f(y,u) = u^m (enables the analytic Jacobian path); 0 if not
    int f_power = 0;
    std::vector<double> lambdas;  // lambda_0 .. lambda_M, differential kinds only
    std::vector<double> ics;      // c_0 .. c_{M-1}
    Index n = 20;
    int kernel_degree = -1;  // < 0: auto
};

struct NewtonConfig {
    int max_iter = 100;
    double step_tol = 1e-14;   // on ||du||_inf
    double resid_tol = 1e-12;  // on ||F||_2
    bool use_analytic_power_jacobian = true;
};

struct SolveReport {
    CoeffVec u;  // in P~^{(1,0)}
    double residual_norm = 0.0;
    int newton_iters = 0;
    Index band_lower = 0, band_upper = 0, dense_rows = 0;
    double wall_time = 0.0;
    std::vector<double> ic_residuals;
    /// ||F||_2 per Newton iterate (nonlinear solves), starting at the guess
    std::vector<double> residual_history;
    /// first-kind solves only: rough condition estimate, flagged above 1e10
    double condition_estimate = 0.0;
    bool ill_conditioned = false;
};

class NewtonNonConvergence : public std::runtime_error {
public:
    NewtonNonConvergence(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& residual_history() const { return history_; }

private:
    std::vector<double> history_;
};

/// Differential-plus-boundary system for VIDE kinds: `a` holds the boundary
/// evaluation rows on top of the shifted differential/Volterra band, `rhs`
/// stacks the initial conditions over the forcing coefficients.
struct VideSystem {
    AlmostBandedMatrix a;
    Vector rhs;
    Index order = 0;  // M
    /// body operator before the square truncation, for residual checks
    BandedMatrix body;
};

SolveReport solve_vie_first_kind(const ProblemSpec& p);
SolveReport solve_vie_second_kind(const ProblemSpec& p);

VideSystem build_vide_operator(const ProblemSpec& p, const voltop::VolterraOperator& v);
SolveReport solve_vide_linear(const ProblemSpec& p);

/// Pointwise composition f(y, u(y)) mapped back to coefficients, oversampled
/// to max(2 len, len+16) quadrature points.
CoeffVec compose_nonlinearity(const std::function<double(double, double)>& f, const CoeffVec& u);

/// Newton objective for the nonlinear kinds: identity/derivative terms act on
/// u, the Volterra operator acts on f(u).
Vector nonlinear_residual(const ProblemSpec& p, const CoeffVec& u);

SolveReport solve_nonlinear(const ProblemSpec& p, const NewtonConfig& cfg, const Vector& guess);

}  // namespace volterra::solver
