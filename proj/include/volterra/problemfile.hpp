#pragma once

#include "volterra/expr.hpp"
#include "volterra/solver.hpp"

namespace volterra::problemfile {

/// Schema or content error in a problem file; the message names the offending
/// key so the CLI can report actionable diagnostics.
class ProblemFileError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A validated problem file: the solver-ready spec plus the optional
/// ground-truth solution and Newton starting guess.
struct LoadedProblem {
    solver::ProblemSpec spec;
    expr::Expr solution;  // valid() iff the file supplied one
    expr::Expr guess;     // valid() iff the file supplied one; default zero
    std::map<std::string, double> params;

    bool nonlinear() const {
        return spec.kind == solver::ProblemKind::NlVie ||
               spec.kind == solver::ProblemKind::NlVide;
    }
    bool differential() const {
        return spec.kind == solver::ProblemKind::Vide ||
               spec.kind == solver::ProblemKind::NlVide;
    }
};

/// Parse and validate a problem document (JSON text). `param_overrides`
/// replaces values in the file's params block (e.g. --param k=100).
LoadedProblem parse_problem(const std::string& json_text,
                            const std::map<std::string, double>& param_overrides = {});

/// Read the file at `path` and parse it.
LoadedProblem load_problem(const std::string& path,
                           const std::map<std::string, double>& param_overrides = {});

}  // namespace volterra::problemfile
