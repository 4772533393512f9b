#pragma once

// Command drivers behind the CLI: certify, solve, mms and residual. Each
// returns the process exit code and writes its artifacts to the supplied
// streams, so commands are testable in process.
//
// Exit codes: 0 success / certificate pass; 2 certificate fail; 3 numerical
// hypothesis violation; 4 solver non-convergence; 64 problem-file or
// expression errors; 65 data shape mismatch; 1 unexpected internal error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bvpcert/certify.hpp"
#include "bvpcert/detail/taylor.hpp"
#include "bvpcert/errors.hpp"
#include "bvpcert/problem_file.hpp"
#include "bvpcert/solver.hpp"
#include "bvpcert/version.hpp"

namespace bvpcert {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int certificate_fail = 2;
inline constexpr int hypothesis = 3;
inline constexpr int no_convergence = 4;
inline constexpr int schema = 64;
inline constexpr int shape = 65;
} // namespace exit_code

struct CliOverrides {
    std::optional<int> grid;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::optional<int> probes;
    bool force = false;
};

inline void apply_overrides(ProblemSpec& spec, const CliOverrides& o) {
    if (o.grid) spec.num.m = *o.grid;
    if (o.tol) spec.num.tol = *o.tol;
    if (o.seed) spec.num.seed = *o.seed;
    if (o.probes) spec.num.probes = *o.probes;
    if (spec.num.m < 5) throw SchemaError("grid override must be at least 5 nodes");
}

inline int run_guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const HypothesisError& e) {
        err << "hypothesis violation: " << e.what() << "\n";
        return exit_code::hypothesis;
    } catch (const CertificateError& e) {
        err << "certificate failure: " << e.what() << "\n";
        return exit_code::certificate_fail;
    } catch (const SchemaError& e) {
        err << "problem file error: " << e.what() << "\n";
        return exit_code::schema;
    } catch (const ParseError& e) {
        err << "expression error at offset " << e.offset() << ": " << e.what() << "\n";
        return exit_code::schema;
    } catch (const ShapeError& e) {
        err << "shape mismatch: " << e.what() << "\n";
        return exit_code::shape;
    } catch (const EvalError& e) {
        err << "evaluation error: " << e.what() << "\n";
        return exit_code::schema;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_code::internal;
    }
}

inline int cmd_certify(const std::string& path, const CliOverrides& o, std::ostream& out,
                       std::ostream& err, const std::string& out_path = "") {
    return run_guarded(err, [&]() {
        ProblemSpec spec = load_problem_file(path);
        apply_overrides(spec, o);
        CertifiedProblem cp = certify_problem(spec);
        std::string doc = format_certificate(cp.cert, kVersion);
        out << doc;
        if (!out_path.empty()) {
            std::ofstream f(out_path, std::ios::binary);
            if (!f) throw SchemaError("cannot write certificate to '" + out_path + "'");
            f << doc;
        }
        if (!cp.cert.k1_consistent() || !cp.cert.k2_consistent())
            err << "warning: sampled Lipschitz estimate exceeds a declared constant; "
                   "the certificate rests on the declared values\n";
        return cp.cert.theorem1 ? exit_code::ok : exit_code::certificate_fail;
    });
}

inline std::string format_solve_report(const SolveReport& rep, bool forced) {
    std::ostringstream os;
    os << "bvpcert-solve-report v1\n";
    os << "tool_version = " << kVersion << "\n";
    const char* status = "max_iterations";
    if (rep.status == SolveStatus::Converged) status = "converged";
    if (rep.status == SolveStatus::LeftBall) status = "left_ball";
    os << "status = " << status << "\n";
    os << "certified = " << (forced ? "forced" : "yes") << "\n";
    os << "outer_iterations = " << rep.iterations << "\n";
    os << "ode_residual = " << format_double(rep.ode_residual) << "\n";
    os << "bc_residual = " << format_double(rep.bc_residual) << "\n";
    os << "solution_norm = " << format_double(rep.solution.sup_norm()) << "\n";
    {
        std::string hist;
        for (double r : rep.residual_history)
            hist += (hist.empty() ? "" : " ") + format_double(r);
        os << "residual_history = " << hist << "\n";
    }
    if (!rep.note.empty()) os << "note = " << rep.note << "\n";
    os << "[certificate]\n";
    return os.str();
}

inline int cmd_solve(const std::string& path, const std::string& csv_path, const CliOverrides& o,
                     std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        ProblemSpec spec = load_problem_file(path);
        apply_overrides(spec, o);
        CertifiedProblem cp = certify_problem(spec);
        const Certificate& cert = cp.cert;
        if (!cert.theorem1 && !o.force) {
            out << format_certificate(cert, kVersion);
            err << "contraction certificate failed (q = " << format_double(cert.q)
                << " >= 1); rerun with --force for an uncertified attempt\n";
            return exit_code::certificate_fail;
        }
        if (cert.theorem2 != Certificate::T2::Pass && !o.force) {
            out << format_certificate(cert, kVersion);
            err << "ball condition not certified (theorem2 = "
                << (cert.theorem2 == Certificate::T2::Fail ? "fail" : "unknown")
                << "); declare C in [nonlinear] or rerun with --force\n";
            return exit_code::certificate_fail;
        }

        FullSolveOptions opt;
        opt.q = cert.q;
        opt.tol = spec.num.tol;
        opt.max_inner = spec.num.max_inner;
        opt.max_outer = spec.num.max_outer;
        opt.anderson = spec.num.anderson;
        if (cert.theorem1 && cert.theorem2 == Certificate::T2::Pass)
            opt.ball_radius = cert.ball.radius;
        SolveReport rep = solve_full(spec, cp.F, cp.BM, opt);

        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) throw SchemaError("cannot write solution CSV to '" + csv_path + "'");
        if (!rep.converged())
            csv << "# WARNING: iteration did not converge; this is the last iterate, not a "
                   "verified solution\n";
        write_csv(csv, rep.solution);

        out << format_solve_report(rep, o.force);
        out << format_certificate(cert, kVersion);
        return rep.converged() ? exit_code::ok : exit_code::no_convergence;
    });
}

namespace detail {

// Exact trajectory of a t-only expression, columns 0..order-1.
inline Trajectory trajectory_from_expr(const ScalarExpr& e, const Grid& g, int order) {
    Trajectory x(g, order);
    for (int i = 0; i < g.size(); ++i) {
        std::vector<double> d = derivatives_at(e, g.node(i), order);
        for (int j = 0; j < order; ++j) x.at(i, j) = d[j];
    }
    return x;
}

} // namespace detail

// Least-squares slope of log(err) against log(h).
inline double fit_order(const std::vector<std::pair<double, double>>& h_err) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& [h, e] : h_err) {
        if (e <= 0.0) continue;
        const double lx = std::log(h), ly = std::log(e);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::infinity();
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct MmsResult {
    std::vector<std::pair<int, double>> errors; // (m, sup error)
    double order = 0.0;
    bool machine_precision = false;
};

// Builds forcing and boundary shifts so `exact` solves the problem, then
// solves on a ladder of grids and reports errors and the fitted order.
inline MmsResult run_mms(ProblemSpec spec, const ScalarExpr& exact,
                         const std::vector<int>& grids = {101, 201, 401, 801}) {
    if (exact.uses_x()) throw SchemaError("mms exact solution must be an expression in t");
    const int n = spec.order();
    MmsResult res;
    for (int m : grids) {
        spec.num.m = m;
        Grid g(m);
        Trajectory star = detail::trajectory_from_expr(exact, g, n);

        // defect forcing: L x* + psi(x*) - G(x*), nodal
        spec.extra_forcing.clear();
        spec.extra_phi.clear();
        std::vector<double> forcing(m, 0.0);
        for (int i = 0; i < m; ++i) {
            const double t = g.node(i);
            std::vector<double> d = detail::derivatives_at(exact, t, n + 1);
            double acc = 0.0;
            for (int j = 0; j <= n; ++j) acc += spec.L.coeff(j, t) * d[j];
            forcing[i] = acc + spec.psi.eval(t, d[0]);
        }
        std::vector<double> gstar = apply_G(spec, star);
        for (int i = 0; i < m; ++i) forcing[i] -= gstar[i];
        spec.extra_forcing = std::move(forcing);

        std::vector<double> bshift = apply_B(spec.B, star);
        std::vector<double> estar = eval_eta(spec, star);
        std::vector<double> pstar = eval_phi(spec, star);
        for (int i = 0; i < n; ++i) bshift[i] += estar[i] - pstar[i];
        spec.extra_phi = std::move(bshift);

        CertifiedProblem cp = certify_problem(spec);
        if (!cp.cert.theorem1)
            throw CertificateError("mms: contraction certificate failed at m = " + std::to_string(m));
        FullSolveOptions opt;
        opt.q = cp.cert.q;
        opt.tol = spec.num.tol;
        opt.max_inner = spec.num.max_inner;
        opt.max_outer = spec.num.max_outer;
        opt.anderson = spec.num.anderson;
        SolveReport rep = solve_full(spec, cp.F, cp.BM, opt);
        if (!rep.converged())
            throw CertificateError("mms: solve did not converge at m = " + std::to_string(m) +
                                   " (" + rep.note + ")");
        double errv = 0.0;
        for (int i = 0; i < m; ++i)
            errv = std::max(errv, std::fabs(rep.solution.value(i, 0) - star.value(i, 0)));
        res.errors.emplace_back(m, errv);
    }
    std::vector<std::pair<double, double>> h_err;
    bool all_tiny = true;
    for (const auto& [m, e] : res.errors) {
        h_err.emplace_back(1.0 / (m - 1), e);
        all_tiny = all_tiny && e <= 1e-12;
    }
    res.machine_precision = all_tiny;
    res.order = all_tiny ? std::numeric_limits<double>::infinity() : fit_order(h_err);
    return res;
}

inline int cmd_mms(const std::string& path, const std::string& exact_src, const CliOverrides& o,
                   std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        ProblemSpec spec = load_problem_file(path);
        apply_overrides(spec, o);
        ScalarExpr exact = parse_scalar(exact_src);
        MmsResult res = run_mms(spec, exact);
        out << "bvpcert-mms-report v1\n";
        out << "exact = " << exact.print() << "\n";
        for (const auto& [m, e] : res.errors)
            out << "m = " << m << "  sup_error = " << format_double(e) << "\n";
        if (res.machine_precision)
            out << "order = exact (errors at machine precision)\n";
        else
            out << "order = " << format_double(res.order) << "\n";
        return exit_code::ok;
    });
}

inline int cmd_residual(const std::string& path, const std::string& csv_path,
                        const CliOverrides& o, std::ostream& out, std::ostream& err) {
    return run_guarded(err, [&]() {
        ProblemSpec spec = load_problem_file(path);
        apply_overrides(spec, o);
        std::ifstream csv(csv_path);
        if (!csv) throw ShapeError("cannot open CSV '" + csv_path + "'");
        Trajectory x = read_csv(csv);
        if (x.order() != spec.order())
            throw ShapeError("CSV carries " + std::to_string(x.order()) +
                             " derivative columns but the problem has n = " +
                             std::to_string(spec.order()));
        if (x.nodes() != spec.num.m)
            throw ShapeError("CSV has " + std::to_string(x.nodes()) + " rows but the problem grid is m = " +
                             std::to_string(spec.num.m) + " (use --grid to match)");
        auto [ode, bc] = residual(spec, x);
        out << "bvpcert-residual-report v1\n";
        out << "ode_residual = " << format_double(ode) << "\n";
        out << "bc_residual = " << format_double(bc) << "\n";
        return exit_code::ok;
    });
}

} // namespace bvpcert
