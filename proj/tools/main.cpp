#include <CLI11.hpp>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "volterra/problemfile.hpp"

using nlohmann::json;
using volterra::jacobi::CoeffVec;
using volterra::jacobi::clenshaw_eval;
using volterra::linalg::Vector;
using volterra::problemfile::LoadedProblem;
using volterra::problemfile::ProblemFileError;
using volterra::solver::NewtonNonConvergence;
using volterra::solver::ProblemKind;
using volterra::solver::SolveReport;

namespace {

#ifndef VOLTERRA_CATALOG_DIR
#define VOLTERRA_CATALOG_DIR "catalog"
#endif

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::map<std::string, double> parse_param_args(const std::vector<std::string>& args) {
    std::map<std::string, double> out;
    for (const std::string& a : args) {
        const size_t eq = a.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ProblemFileError("--param expects name=value, got \"" + a + "\"");
        char* end = nullptr;
        const double v = std::strtod(a.c_str() + eq + 1, &end);
        if (end != a.c_str() + a.size())
            throw ProblemFileError("--param value for \"" + a.substr(0, eq) +
                                   "\" is not a number");
        out[a.substr(0, eq)] = v;
    }
    return out;
}

int worker_count(size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("VOLTERRA_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<int>(std::min<size_t>(n, jobs));
}

SolveReport run_solve(const LoadedProblem& lp) {
    switch (lp.spec.kind) {
        case ProblemKind::Vie1:
            return volterra::solver::solve_vie_first_kind(lp.spec);
        case ProblemKind::Vie2:
            return volterra::solver::solve_vie_second_kind(lp.spec);
        case ProblemKind::Vide:
            return volterra::solver::solve_vide_linear(lp.spec);
        case ProblemKind::NlVie:
        case ProblemKind::NlVide: {
            Vector guess = Vector::Zero(lp.spec.n);
            if (lp.guess.valid()) {
                const volterra::expr::Expr& ge = lp.guess;
                const auto params = lp.params;
                guess = volterra::jacobi::expand(
                            [&ge, &params](double x) {
                                std::map<std::string, double> b = params;
                                b["x"] = x;
                                return ge.eval(b);
                            },
                            {1.0, 0.0}, lp.spec.n)
                            .coeffs;
            }
            return volterra::solver::solve_nonlinear(lp.spec, {}, guess);
        }
    }
    throw std::logic_error("run_solve: unhandled kind");
}

std::function<double(double)> reference_fn(const LoadedProblem& lp) {
    const volterra::expr::Expr sol = lp.solution;
    const auto params = lp.params;
    return [sol, params](double x) {
        std::map<std::string, double> b = params;
        b["x"] = x;
        return sol.eval(b);
    };
}

/// Infinity norm of the error on a 1000-point uniform grid.
double sup_error_grid(const CoeffVec& u, const std::function<double(double)>& ref) {
    double err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = i / 999.0;
        err = std::max(err, std::abs(clenshaw_eval(u, x) - ref(x)));
    }
    return err;
}

json report_to_json(const LoadedProblem& lp, const SolveReport& rep, bool converged) {
    json j;
    j["n"] = lp.spec.n;
    j["converged"] = converged;
    j["residual_norm"] = rep.residual_norm;
    j["newton_iters"] = rep.newton_iters;
    j["band_lower"] = rep.band_lower;
    j["band_upper"] = rep.band_upper;
    j["dense_rows"] = rep.dense_rows;
    j["wall_time"] = rep.wall_time;
    j["ic_residuals"] = rep.ic_residuals;
    j["residual_history"] = rep.residual_history;
    if (lp.spec.kind == ProblemKind::Vie1) {
        j["condition_estimate"] = rep.condition_estimate;
        j["ill_conditioned"] = rep.ill_conditioned;
    }
    if (lp.solution.valid() && converged)
        j["sup_error"] = sup_error_grid(rep.u, reference_fn(lp));
    return j;
}

void write_artifacts(const std::string& out_dir, const LoadedProblem& lp,
                     const SolveReport& rep, bool converged) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::ofstream report(fs::path(out_dir) / "report.json", std::ios::binary);
    report << report_to_json(lp, rep, converged).dump(2) << "\n";

    if (!converged) return;
    std::ofstream sol(fs::path(out_dir) / "solution.csv", std::ios::binary);
    sol << "x,u\n";
    for (int i = 0; i < 200; ++i) {
        const double x = i / 199.0;
        sol << g17(x) << "," << g17(clenshaw_eval(rep.u, x)) << "\n";
    }
    std::ofstream coeffs(fs::path(out_dir) / "coefficients.csv", std::ios::binary);
    coeffs << "index,coefficient\n";
    for (Eigen::Index i = 0; i < rep.u.coeffs.size(); ++i)
        coeffs << i << "," << g17(rep.u.coeffs[i]) << "\n";
}

int cmd_solve(const std::string& file, const std::string& out_dir,
              const std::map<std::string, double>& params) {
    LoadedProblem lp = volterra::problemfile::load_problem(file, params);
    try {
        SolveReport rep = run_solve(lp);
        write_artifacts(out_dir, lp, rep, true);
        return 0;
    } catch (const NewtonNonConvergence& e) {
        SolveReport rep;
        rep.newton_iters = static_cast<int>(e.residual_history().size());
        rep.residual_history = e.residual_history();
        rep.residual_norm =
            rep.residual_history.empty() ? 0.0 : rep.residual_history.back();
        write_artifacts(out_dir, lp, rep, false);
        std::fprintf(stderr, "solve: %s\n", e.what());
        return 2;
    }
}

int cmd_converge(const std::string& file, const std::string& orders_arg,
                 const std::string& out_file, const std::map<std::string, double>& params) {
    LoadedProblem base = volterra::problemfile::load_problem(file, params);

    std::vector<long> orders;
    std::stringstream ss(orders_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char* end = nullptr;
        const long n = std::strtol(tok.c_str(), &end, 10);
        if (end != tok.c_str() + tok.size() || n < 1)
            throw ProblemFileError("--orders expects positive integers, got \"" + tok + "\"");
        orders.push_back(n);
    }
    if (orders.empty()) throw ProblemFileError("--orders must list at least one order");
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end()), orders.end());

    struct Row {
        SolveReport rep;
        bool ok = false;
        std::string error;
    };
    std::vector<Row> rows(orders.size());
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (size_t i = next.fetch_add(1); i < orders.size(); i = next.fetch_add(1)) {
            LoadedProblem lp = base;
            lp.spec.n = orders[i];
            try {
                rows[i].rep = run_solve(lp);
                rows[i].ok = true;
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < worker_count(orders.size()); ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();

    // reference: the analytic solution when given, else the largest converged order
    std::function<double(double)> ref;
    if (base.solution.valid()) {
        ref = reference_fn(base);
    } else {
        for (size_t i = rows.size(); i-- > 0;)
            if (rows[i].ok) {
                const CoeffVec u = rows[i].rep.u;
                ref = [u](double x) { return clenshaw_eval(u, x); };
                break;
            }
        if (!ref) throw ProblemFileError("converge: no order converged; nothing to compare");
    }

    std::ostringstream csv;
    csv << "n,sup_error,wall_time\n";
    bool any_failed = false;
    for (size_t i = 0; i < orders.size(); ++i) {
        if (rows[i].ok) {
            csv << orders[i] << "," << g17(sup_error_grid(rows[i].rep.u, ref)) << ","
                << g17(rows[i].rep.wall_time) << "\n";
        } else {
            csv << orders[i] << ",nan,nan\n";
            std::fprintf(stderr, "converge: n=%ld failed: %s\n", orders[i],
                         rows[i].error.c_str());
            any_failed = true;
        }
    }
    std::fputs(csv.str().c_str(), stdout);
    if (!out_file.empty()) {
        std::ofstream out(out_file, std::ios::binary);
        out << csv.str();
    }
    return any_failed ? 2 : 0;
}

int cmd_operator(const std::string& file, double tol, const std::string& out_dir,
                 const std::map<std::string, double>& params) {
    LoadedProblem lp = volterra::problemfile::load_problem(file, params);
    const auto ke = volterra::voltop::expand_kernel(lp.spec.kernel, lp.spec.kernel_degree);
    const auto v = volterra::voltop::assemble_volterra(ke, lp.spec.n);

    // the system matrix whose sparsity we report
    volterra::linalg::DenseMatrix a;
    Eigen::Index dense_rows = 0;
    if (lp.differential()) {
        const auto sys = volterra::solver::build_vide_operator(lp.spec, v);
        a = sys.a.to_dense();
        dense_rows = sys.a.dense_top_rows;
    } else {
        a = volterra::linalg::DenseMatrix::Identity(lp.spec.n, lp.spec.n) -
            v.composed.to_dense();
    }

    const double cutoff = tol * a.cwiseAbs().maxCoeff();
    long nnz = 0;
    Eigen::Index lower = 0, upper = 0;
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream coo(fs::path(out_dir) / "operator.csv", std::ios::binary);
    coo << "row,col,value\n";
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (std::abs(a(i, j)) >= cutoff) {
                ++nnz;
                if (i >= dense_rows) {
                    lower = std::max(lower, i - j);
                    upper = std::max(upper, j - i);
                }
                coo << i << "," << j << "," << g17(a(i, j)) << "\n";
            }

    json j;
    j["n"] = lp.spec.n;
    j["tol"] = tol;
    j["kernel_degree"] = v.kernel_degree;
    j["dense_top_rows"] = dense_rows;
    j["band_lower"] = lower;
    j["band_upper"] = upper;
    j["nnz"] = nnz;
    std::ofstream out(fs::path(out_dir) / "operator.json", std::ios::binary);
    out << j.dump(2) << "\n";
    std::puts(j.dump(2).c_str());
    return 0;
}

int cmd_repro(const std::string& set) {
    struct Run {
        std::string file;
        long n;
        std::map<std::string, double> params;
    };
    const std::string dir = VOLTERRA_CATALOG_DIR;
    std::vector<Run> runs;
    if (set == "set1") {
        runs = {{dir + "/set1_cosh.json", 30, {}},
                {dir + "/set1_sincos.json", 30, {}},
                {dir + "/set1_xexp.json", 30, {}}};
    } else if (set == "set3-low") {
        runs = {{dir + "/set3_low.json", 20, {}}};
    } else if (set == "set3-high") {
        runs = {{dir + "/set3_high.json", 300, {{"k", 100.0}}},
                {dir + "/set3_high.json", 800, {{"k", 1000.0}}}};
    } else if (set == "nl-set1") {
        runs = {{dir + "/nl1_exp.json", 30, {}}, {dir + "/nl1_sin.json", 30, {}}};
    } else if (set == "nl-vide") {
        runs = {{dir + "/nlvide_sin.json", 40, {}}, {dir + "/nlvide_tan.json", 40, {}}};
    } else {
        throw ProblemFileError("unknown repro set \"" + set +
                               "\" (expected set1, set3-low, set3-high, nl-set1, nl-vide)");
    }

    std::printf("problem,n,sup_error,wall_time\n");
    int status = 0;
    for (const Run& r : runs) {
        LoadedProblem lp = volterra::problemfile::load_problem(r.file, r.params);
        lp.spec.n = r.n;
        const std::string name = std::filesystem::path(r.file).stem().string();
        try {
            SolveReport rep = run_solve(lp);
            const double err = lp.solution.valid()
                                   ? sup_error_grid(rep.u, reference_fn(lp))
                                   : std::numeric_limits<double>::quiet_NaN();
            std::printf("%s,%ld,%s,%s\n", name.c_str(), r.n, g17(err).c_str(),
                        g17(rep.wall_time).c_str());
        } catch (const NewtonNonConvergence& e) {
            std::printf("%s,%ld,nan,nan\n", name.c_str(), r.n);
            std::fprintf(stderr, "repro: %s: %s\n", name.c_str(), e.what());
            status = 2;
        }
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse spectral solver for Volterra integral and integro-differential equations"};
    app.require_subcommand(1);

    std::string file, out_dir = ".", orders, out_file, set;
    double tol = 1e-13;
    std::vector<std::string> param_args;

    CLI::App* solve = app.add_subcommand("solve", "Solve a problem file and write artifacts");
    solve->add_option("file", file, "problem file (JSON)")->required();
    solve->add_option("--out", out_dir, "output directory");
    solve->add_option("--param", param_args, "override a parameter, name=value");

    CLI::App* converge = app.add_subcommand("converge", "Error sweep over approximation orders");
    converge->add_option("file", file, "problem file (JSON)")->required();
    converge->add_option("--orders", orders, "comma-separated list of orders")->required();
    converge->add_option("--out", out_file, "also write the CSV to this file");
    converge->add_option("--param", param_args, "override a parameter, name=value");

    CLI::App* op = app.add_subcommand("operator", "Report operator bandwidth and sparsity");
    op->add_option("file", file, "problem file (JSON)")->required();
    op->add_option("--tol", tol, "relative threshold for counted entries");
    op->add_option("--out", out_dir, "output directory");
    op->add_option("--param", param_args, "override a parameter, name=value");

    CLI::App* repro = app.add_subcommand("repro", "Reproduce a built-in experiment set");
    repro->add_option("set", set, "set1, set3-low, set3-high, nl-set1, or nl-vide")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const auto params = parse_param_args(param_args);
        if (solve->parsed()) return cmd_solve(file, out_dir, params);
        if (converge->parsed()) return cmd_converge(file, orders, out_file, params);
        if (op->parsed()) return cmd_operator(file, tol, out_dir, params);
        if (repro->parsed()) return cmd_repro(set);
    } catch (const NewtonNonConvergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
