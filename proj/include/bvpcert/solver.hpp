#pragma once

// Fixed-point engines. The semilinear solve is the contraction iteration
// behind the uniqueness result: x_{k+1} = linear solve of (h - psi(x_k),
// v - eta(x_k)), stopped when the increment guarantees the target accuracy
// through the contraction estimate. The full solve wraps it in a damped
// outer iteration for the forcing pair (G(x), phi(x)); the underlying
// existence argument is non-constructive, so non-convergence of the outer
// loop is reported as exactly that, never as non-existence.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bvpcert/boundary.hpp"
#include "bvpcert/expr.hpp"
#include "bvpcert/grid.hpp"
#include "bvpcert/linode.hpp"
#include "bvpcert/measure.hpp"

namespace bvpcert {

struct GOperator {
    enum class Kind { Zero, Pointwise, IntegralKernel } kind = Kind::Zero;
    ScalarExpr expr; // pointwise g(t, x(t)) or kernel k(t, x(s))
};

struct Numerics {
    int m = 1001;
    double tol = 1e-8;
    int max_inner = 200;
    int max_outer = 200;
    std::uint64_t seed = 12345;
    int probes = 201;
    bool anderson = false;
    int lipschitz_samples = 20000;
    int ball_samples = 32;
    int ball_doublings = 12;
};

struct ProblemSpec {
    LinearOperator L;
    BoundaryOperator B;
    ScalarExpr psi;                   // function of x alone
    std::vector<FunctionalExpr> eta;  // n entries
    std::vector<FunctionalExpr> phi;  // n entries
    GOperator G;
    double k1 = 0.0;                  // declared Lipschitz constant of psi
    double k2 = 0.0;                  // declared Lipschitz constant of eta
    std::optional<double> bound_C;    // declared global bound on ||(G(x), phi(x))||
    Numerics num;

    // Manufactured-solution hooks: nodal forcing added to G(x) and a shift
    // added to phi(x). Empty when unused.
    std::vector<double> extra_forcing;
    std::vector<double> extra_phi;

    int order() const { return L.order(); }

    void validate() const {
        const int n = L.order();
        if (B.order() != n) throw ShapeError("boundary operator order != operator order");
        if (static_cast<int>(eta.size()) != n || static_cast<int>(phi.size()) != n)
            throw ShapeError("eta and phi must each have n entries");
        if (k1 < 0.0 || k2 < 0.0) throw ShapeError("Lipschitz constants must be nonnegative");
        if (psi.uses_t()) throw SchemaError("psi must be a function of x alone");
        for (const auto& f : eta)
            if (f.max_deriv_order() > n - 1)
                throw ShapeError("eta uses a derivative of order > n-1");
        for (const auto& f : phi)
            if (f.max_deriv_order() > n - 1)
                throw ShapeError("phi uses a derivative of order > n-1");
        if (!extra_forcing.empty() && static_cast<int>(extra_forcing.size()) != num.m)
            throw ShapeError("extra forcing sample count != m");
        if (!extra_phi.empty() && static_cast<int>(extra_phi.size()) != n)
            throw ShapeError("extra phi shift count != n");
    }
};

inline std::vector<double> apply_G(const ProblemSpec& spec, const Trajectory& x) {
    const Grid& g = x.grid();
    const int m = g.size();
    std::vector<double> out(m, 0.0);
    switch (spec.G.kind) {
        case GOperator::Kind::Zero:
            break;
        case GOperator::Kind::Pointwise:
            for (int i = 0; i < m; ++i) out[i] = spec.G.expr.eval(g.node(i), x.value(i, 0));
            break;
        case GOperator::Kind::IntegralKernel: {
            std::vector<double> row(m);
            for (int i = 0; i < m; ++i) {
                const double t = g.node(i);
                for (int s = 0; s < m; ++s) row[s] = spec.G.expr.eval(t, x.value(s, 0));
                out[i] = quad(row, g);
            }
            break;
        }
    }
    if (!spec.extra_forcing.empty())
        for (int i = 0; i < m; ++i) out[i] += spec.extra_forcing[i];
    return out;
}

inline std::vector<double> eval_eta(const ProblemSpec& spec, const Trajectory& x) {
    std::vector<double> v(spec.order());
    for (int i = 0; i < spec.order(); ++i) v[i] = spec.eta[i].eval(x);
    return v;
}

inline std::vector<double> eval_phi(const ProblemSpec& spec, const Trajectory& x) {
    std::vector<double> v(spec.order());
    for (int i = 0; i < spec.order(); ++i) v[i] = spec.phi[i].eval(x);
    if (!spec.extra_phi.empty())
        for (int i = 0; i < spec.order(); ++i) v[i] += spec.extra_phi[i];
    return v;
}

// Norm of the forcing pair on C x R^n: ||G(x)|| + |phi(x)|.
inline double forcing_pair_norm(const ProblemSpec& spec, const Trajectory& x) {
    std::vector<double> gx = apply_G(spec, x);
    double gn = 0.0;
    for (double v : gx) gn = std::max(gn, std::fabs(v));
    double pn = 0.0;
    for (double v : eval_phi(spec, x)) pn = std::max(pn, std::fabs(v));
    return gn + pn;
}

namespace detail {

// Fourth-order first derivative of nodal samples, one-sided at the edges.
inline std::vector<double> fd_derivative(std::span<const double> f, const Grid& g) {
    const int m = g.size();
    if (m < 5) throw ShapeError("finite-difference residual needs at least 5 nodes");
    const double ih = 1.0 / (12.0 * g.spacing());
    std::vector<double> d(m);
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) * ih;
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) * ih;
    for (int i = 2; i < m - 2; ++i)
        d[i] = (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]) * ih;
    d[m - 2] = (3 * f[m - 1] + 10 * f[m - 2] - 18 * f[m - 3] + 6 * f[m - 4] - f[m - 5]) * ih;
    d[m - 1] = (25 * f[m - 1] - 48 * f[m - 2] + 36 * f[m - 3] - 16 * f[m - 4] + 3 * f[m - 5]) * ih;
    return d;
}

} // namespace detail

// Defect of x against data (h, v): the ODE part uses a finite-difference
// top derivative rather than trusting stored columns, so it is independent
// of the iteration path. The sup runs over interior nodes.
inline std::pair<double, double> residual_data(const ProblemSpec& spec, const Trajectory& x,
                                               std::span<const double> h,
                                               const std::vector<double>& v) {
    const Grid& g = x.grid();
    const int m = g.size();
    const int n = spec.order();
    std::vector<double> top = detail::fd_derivative(x.column(n - 1), g);
    double ode = 0.0;
    for (int i = 1; i + 1 < m; ++i) {
        const double t = g.node(i);
        double acc = spec.L.coeff(n, t) * top[i];
        for (int j = 0; j < n; ++j) acc += spec.L.coeff(j, t) * x.value(i, j);
        acc += spec.psi.eval(t, x.value(i, 0));
        ode = std::max(ode, std::fabs(acc - h[i]));
    }
    std::vector<double> b = apply_B(spec.B, x);
    std::vector<double> e = eval_eta(spec, x);
    double bc = 0.0;
    for (int i = 0; i < n; ++i) bc = std::max(bc, std::fabs(b[i] + e[i] - v[i]));
    return {ode, bc};
}

// Defect of x as a solution of the full problem with forcing pair (G, phi).
inline std::pair<double, double> residual(const ProblemSpec& spec, const Trajectory& x) {
    return residual_data(spec, x, apply_G(spec, x), eval_phi(spec, x));
}

enum class SolveStatus { Converged, MaxIterations, LeftBall };

struct SolveReport {
    explicit SolveReport(Trajectory sol) : solution(std::move(sol)) {}

    Trajectory solution;
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    std::vector<double> ratio_history;    // successive increment ratios
    std::vector<double> residual_history; // outer loop only
    double first_increment = 0.0;
    double last_increment = 0.0;
    double a_priori_bound = 0.0;     // q^k/(1-q) * ||x1 - x0||
    double a_posteriori_bound = 0.0; // q/(1-q) * last increment
    double ode_residual = 0.0;
    double bc_residual = 0.0;
    double q_used = 0.0;
    std::string note;

    bool converged() const { return status == SolveStatus::Converged; }
};

struct SemilinearOptions {
    double q = 0.0;
    double tol = 1e-8;
    int max_iterations = 200;
    const Trajectory* start = nullptr;
};

inline SolveReport solve_semilinear(const ProblemSpec& spec, const FundamentalSystem& F,
                                    const BoundaryMatrix& BM, std::span<const double> h,
                                    const std::vector<double>& v, const SemilinearOptions& opt) {
    const Grid& g = F.grid();
    const int m = g.size();
    const double q = opt.q;
    double threshold;
    std::string stop_note;
    if (q == 0.0) {
        threshold = std::numeric_limits<double>::infinity();
    } else if (q < 1.0) {
        threshold = opt.tol * (1.0 - q) / q;
    } else {
        threshold = opt.tol;
        stop_note = "q >= 1: stopping on raw increment, no contraction guarantee; ";
    }

    Trajectory x = opt.start ? *opt.start : Trajectory(g, spec.order());
    SolveReport rep{Trajectory(g, spec.order())};
    rep.q_used = q;

    std::vector<double> h_eff(m);
    double prev_delta = -1.0;
    for (int k = 1; k <= opt.max_iterations; ++k) {
        for (int i = 0; i < m; ++i)
            h_eff[i] = h[i] - spec.psi.eval(g.node(i), x.value(i, 0));
        std::vector<double> v_eff = eval_eta(spec, x);
        for (int i = 0; i < spec.order(); ++i) v_eff[i] = v[i] - v_eff[i];
        Trajectory next = solve_linear_bvp(F, spec.B, BM, h_eff, v_eff);

        double delta = 0.0;
        for (int i = 0; i < m; ++i)
            delta = std::max(delta, std::fabs(next.value(i, 0) - x.value(i, 0)));
        if (k == 1) rep.first_increment = delta;
        if (prev_delta > 0.0) rep.ratio_history.push_back(delta / prev_delta);
        prev_delta = delta;
        rep.last_increment = delta;
        x = std::move(next);
        rep.iterations = k;
        if (delta <= threshold) {
            rep.status = SolveStatus::Converged;
            break;
        }
    }

    if (q > 0.0 && q < 1.0) {
        rep.a_priori_bound = std::pow(q, rep.iterations) / (1.0 - q) * rep.first_increment;
        rep.a_posteriori_bound = q / (1.0 - q) * rep.last_increment;
    }
    rep.solution = std::move(x);
    auto [ode, bc] = residual_data(spec, rep.solution, h, v);
    rep.ode_residual = ode;
    rep.bc_residual = bc;
    if (rep.status != SolveStatus::Converged) {
        bool expanding = !rep.ratio_history.empty() && rep.ratio_history.back() >= 1.0;
        rep.note = stop_note + "iteration cap reached" +
                   (expanding ? "; observed ratio >= 1, the declared Lipschitz constants "
                                "likely understate the nonlinearity"
                              : "");
    } else {
        rep.note = stop_note;
    }
    return rep;
}

struct FullSolveOptions {
    double q = 0.0;
    double tol = 1e-8;
    int max_inner = 200;
    int max_outer = 200;
    bool anderson = false;
    std::optional<double> ball_radius; // enforced when present
};

namespace detail {

inline std::vector<double> flatten(const Trajectory& x) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(x.nodes()) * x.order());
    for (int j = 0; j < x.order(); ++j)
        for (int i = 0; i < x.nodes(); ++i) v.push_back(x.value(i, j));
    return v;
}

} // namespace detail

inline SolveReport solve_full(const ProblemSpec& spec, const FundamentalSystem& F,
                              const BoundaryMatrix& BM, const FullSolveOptions& opt) {
    const Grid& g = F.grid();
    const int n = spec.order();
    Trajectory x(g, n);
    SolveReport rep{Trajectory(g, n)};
    rep.q_used = opt.q;

    SemilinearOptions inner;
    inner.q = opt.q;
    inner.tol = opt.tol / 10.0; // keep inexact inner solves subdominant
    inner.max_iterations = opt.max_inner;

    double lambda = 1.0;
    const double lambda_floor = 1.0 / 16.0;
    double prev_res = std::numeric_limits<double>::infinity();
    double prev_norm = 0.0;

    // Anderson window (differences of the last few fixed-point residuals).
    std::vector<std::vector<double>> hist_x, hist_gx;
    const std::size_t window = 3;

    for (int outer = 1; outer <= opt.max_outer; ++outer) {
        std::vector<double> rhs = apply_G(spec, x);
        std::vector<double> v = eval_phi(spec, x);
        inner.start = &x;
        SolveReport in = solve_semilinear(spec, F, BM, rhs, v, inner);
        if (!in.converged()) {
            rep.solution = std::move(in.solution);
            rep.status = SolveStatus::MaxIterations;
            rep.iterations = outer;
            rep.note = "inner contraction failed: " + in.note;
            auto [ode0, bc0] = residual(spec, rep.solution);
            rep.ode_residual = ode0;
            rep.bc_residual = bc0;
            return rep;
        }
        const Trajectory& gx = in.solution;

        Trajectory next(g, n);
        bool mixed = false;
        if (opt.anderson && !hist_x.empty()) {
            std::vector<double> fx = detail::flatten(x), fgx = detail::flatten(gx);
            const std::size_t len = fx.size();
            std::vector<double> r(len);
            for (std::size_t i = 0; i < len; ++i) r[i] = fgx[i] - fx[i];
            const std::size_t w = hist_x.size();
            // columns: r - r_i for each history entry
            std::vector<std::vector<double>> cols(w, std::vector<double>(len));
            for (std::size_t c = 0; c < w; ++c)
                for (std::size_t i = 0; i < len; ++i)
                    cols[c][i] = r[i] - (hist_gx[c][i] - hist_x[c][i]);
            detail::SmallMat ata(static_cast<int>(w));
            std::vector<double> atb(w, 0.0);
            for (std::size_t a = 0; a < w; ++a) {
                for (std::size_t b = 0; b < w; ++b) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < len; ++i) s += cols[a][i] * cols[b][i];
                    ata(static_cast<int>(a), static_cast<int>(b)) = s + (a == b ? 1e-14 : 0.0);
                }
                double s = 0.0;
                for (std::size_t i = 0; i < len; ++i) s += cols[a][i] * r[i];
                atb[a] = s;
            }
            detail::LuFactors lu = detail::lu_factor(ata);
            if (!lu.singular) {
                std::vector<double> gamma = detail::lu_solve(lu, atb);
                std::vector<double> mix_x = fx, mix_g = fgx;
                for (std::size_t c = 0; c < w; ++c)
                    for (std::size_t i = 0; i < len; ++i) {
                        mix_x[i] -= gamma[c] * (fx[i] - hist_x[c][i]);
                        mix_g[i] -= gamma[c] * (fgx[i] - hist_gx[c][i]);
                    }
                for (int j = 0, p = 0; j < n; ++j)
                    for (int i = 0; i < g.size(); ++i, ++p)
                        next.at(i, j) = (1.0 - lambda) * mix_x[p] + lambda * mix_g[p];
                mixed = true;
            }
        }
        if (!mixed) next = axpy(lambda, axpy(-1.0, x, gx), x); // x + lambda (gx - x)

        if (opt.anderson) {
            hist_x.push_back(detail::flatten(x));
            hist_gx.push_back(detail::flatten(gx));
            if (hist_x.size() > window) {
                hist_x.erase(hist_x.begin());
                hist_gx.erase(hist_gx.begin());
            }
        }

        double inc = 0.0;
        for (int i = 0; i < g.size(); ++i)
            inc = std::max(inc, std::fabs(next.value(i, 0) - x.value(i, 0)));
        if (prev_norm > 0.0) rep.ratio_history.push_back(inc / prev_norm);
        prev_norm = inc;
        x = std::move(next);
        rep.iterations = outer;

        auto [ode, bc] = residual(spec, x);
        double res = std::max(ode, bc);
        rep.residual_history.push_back(res);
        rep.ode_residual = ode;
        rep.bc_residual = bc;

        if (opt.ball_radius) {
            double nx = x.sup_norm();
            if (nx > *opt.ball_radius * (1.0 + 1e-12) + 1e-9) {
                rep.solution = std::move(x);
                rep.status = SolveStatus::LeftBall;
                rep.note = "iterate norm " + format_double(nx) + " left the certified ball of radius " +
                           format_double(*opt.ball_radius) +
                           "; the invariance check that backed the certificate was sampled, "
                           "not proved";
                return rep;
            }
        }

        if (res <= opt.tol) {
            rep.solution = std::move(x);
            rep.status = SolveStatus::Converged;
            return rep;
        }
        if (res > prev_res) lambda = std::max(lambda * 0.5, lambda_floor);
        prev_res = res;
    }
    rep.solution = std::move(x);
    rep.status = SolveStatus::MaxIterations;
    rep.note = "outer iteration cap reached without meeting the residual tolerance; the existence "
               "guarantee is non-constructive, so this means 'no convergence', not 'no solution'";
    return rep;
}

} // namespace bvpcert
