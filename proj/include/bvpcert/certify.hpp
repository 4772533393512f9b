#pragma once

// Computes and checks every constant in the solvability hypotheses: the
// bound A0 on the restricted-inverse norm via a discrete Green's kernel, B0
// from the boundary matrix, the contraction constant q = A0 K1 + B0 K2, the
// Lipschitz constant K of the semilinear inverse, the zero-data anchor M0,
// and the ball radius M for the fixed-point existence argument. A0 comes
// from probing the linear solve with nodal hat functions; it is a numerical
// estimate, recorded as such, not a proved enclosure.

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bvpcert/boundary.hpp"
#include "bvpcert/errors.hpp"
#include "bvpcert/expr.hpp"
#include "bvpcert/grid.hpp"
#include "bvpcert/linode.hpp"
#include "bvpcert/rng.hpp"
#include "bvpcert/sampling.hpp"
#include "bvpcert/solver.hpp"

namespace bvpcert {

// L-infinity -> L-infinity induced norm of the kernel of h -> solve(h, 0):
// max over t of the integral of |G(t,s)| ds, estimated by applying the solve
// to a partition-of-unity family of hat functions on a probe grid.
inline double compute_A0(const FundamentalSystem& F, const BoundaryOperator& B,
                         const BoundaryMatrix& BM, int probes) {
    const Grid& g = F.grid();
    const int m = g.size();
    int p = std::min(probes, m);
    if (p < 3) p = 3;
    const double hp = 1.0 / (p - 1);
    const std::vector<double> zero_v(F.order(), 0.0);
    std::vector<double> abs_row_sum(m, 0.0);
    std::vector<double> hat(m);
    for (int j = 0; j < p; ++j) {
        const double sj = static_cast<double>(j) / (p - 1);
        for (int i = 0; i < m; ++i)
            hat[i] = std::max(0.0, 1.0 - std::fabs(g.node(i) - sj) / hp);
        Trajectory y = solve_linear_bvp(F, B, BM, hat, zero_v);
        for (int i = 0; i < m; ++i) abs_row_sum[i] += std::fabs(y.value(i, 0));
    }
    double a0 = 0.0;
    for (double v : abs_row_sum) a0 = std::max(a0, v);
    return a0;
}

inline std::pair<double, bool> contraction_certificate(double a0, double b0, double k1, double k2) {
    if (a0 < 0.0 || b0 < 0.0 || k1 < 0.0 || k2 < 0.0)
        throw ShapeError("contraction certificate inputs must be nonnegative");
    const double q = a0 * k1 + b0 * k2;
    return {q, q < 1.0};
}

inline double lipschitz_K(double a0, double b0, double q) {
    if (!(q < 1.0))
        throw CertificateError("Lipschitz constant undefined: contraction constant q = " +
                               format_double(q) + " is not < 1");
    return std::max(a0, b0) / (1.0 - q);
}

// Sampled lower bound on the Lipschitz constant of a scalar map over a box.
// Mixes far pairs with near pairs so steep spots are not washed out.
inline double estimate_lipschitz(const ScalarExpr& f, double lo, double hi, int samples, Rng& rng) {
    if (samples < 2) throw ShapeError("estimate_lipschitz needs at least 2 samples");
    double best = 0.0;
    const double width = hi - lo;
    for (int i = 0; i < samples; ++i) {
        double a = rng.uniform(lo, hi);
        double b;
        if (i % 2 == 0) {
            b = rng.uniform(lo, hi);
        } else {
            double d = width * 1e-3 * (rng.uniform() + 1e-3);
            b = a + (rng.uniform() < 0.5 ? -d : d);
            if (b < lo || b > hi) b = a - (b - a);
        }
        if (a == b) continue;
        double ratio = std::fabs(f.eval(0.0, a) - f.eval(0.0, b)) / std::fabs(a - b);
        best = std::max(best, ratio);
    }
    return best;
}

// Sampled lower bound on the Lipschitz constant of eta as a map from C
// (sup norm) into R^n (max norm), over random trajectory pairs.
inline double estimate_lipschitz_eta(const ProblemSpec& spec, const Grid& g, int pairs, Rng& rng,
                                     double amplitude = 5.0) {
    double best = 0.0;
    for (int p = 0; p < pairs; ++p) {
        Trajectory x = random_trajectory_with_norm(g, spec.order(), rng, rng.uniform(0.1, amplitude));
        Trajectory y = (p % 2 == 0)
                           ? random_trajectory_with_norm(g, spec.order(), rng, rng.uniform(0.1, amplitude))
                           : axpy(1e-3 * (rng.uniform() + 1e-3), random_trajectory(g, spec.order(), rng), x);
        double dist = 0.0;
        for (int i = 0; i < g.size(); ++i)
            dist = std::max(dist, std::fabs(x.value(i, 0) - y.value(i, 0)));
        if (dist == 0.0) continue;
        std::vector<double> ex = eval_eta(spec, x), ey = eval_eta(spec, y);
        double diff = 0.0;
        for (int i = 0; i < spec.order(); ++i) diff = std::max(diff, std::fabs(ex[i] - ey[i]));
        best = std::max(best, diff / dist);
    }
    return best;
}

// Sup norm of the unique solution of the semilinear problem with zero data.
inline double compute_M0(const ProblemSpec& spec, const FundamentalSystem& F,
                         const BoundaryMatrix& BM, double q) {
    const int m = F.grid().size();
    SemilinearOptions opt;
    opt.q = q;
    opt.tol = spec.num.tol;
    opt.max_iterations = spec.num.max_inner;
    std::vector<double> zeros(m, 0.0);
    SolveReport rep = solve_semilinear(spec, F, BM, zeros, std::vector<double>(spec.order(), 0.0), opt);
    if (!rep.converged())
        throw CertificateError("internal inconsistency: contraction certificate passed but the "
                               "zero-data solve did not converge (" + rep.note + ")");
    return rep.solution.sup_norm();
}

struct BallCertificate {
    enum class Mode { None, UserBound, Sweep } mode = Mode::None;
    enum class Verdict { Pass, Unknown } verdict = Verdict::Unknown;
    double radius = 0.0;
    double bound_used = 0.0;  // C in user-bound mode, sampled sup in sweep mode
    bool empirical = false;   // sweep passes are evidence, not proof
};

// User-bound mode: a declared global bound ||G(x)|| + |phi(x)| <= C gives
// M = M0 + K C by rearranging the ball condition. Sweep mode samples the
// forcing pair over balls of doubling radius and accepts the first radius
// whose sampled sup fits; that verdict is labeled empirical.
inline BallCertificate ball_certificate(const ProblemSpec& spec, const FundamentalSystem& F,
                                        double k, double m0, Rng& rng) {
    BallCertificate out;
    bool g_vanishes = spec.G.kind == GOperator::Kind::Zero && spec.extra_forcing.empty() &&
                      spec.extra_phi.empty();
    for (const FunctionalExpr& p : spec.phi) g_vanishes = g_vanishes && p.is_zero();
    if (g_vanishes && !spec.bound_C) {
        // identically-zero forcing pair is a bound of C = 0, so M = M0
        out.mode = BallCertificate::Mode::UserBound;
        out.verdict = BallCertificate::Verdict::Pass;
        out.bound_used = 0.0;
        out.radius = m0;
        return out;
    }
    if (spec.bound_C) {
        out.mode = BallCertificate::Mode::UserBound;
        out.verdict = BallCertificate::Verdict::Pass;
        out.bound_used = *spec.bound_C;
        out.radius = m0 + k * (*spec.bound_C);
        out.empirical = false;
        return out;
    }
    out.mode = BallCertificate::Mode::Sweep;
    out.empirical = true;
    const Grid& g = F.grid();
    double M = std::max(1.0, 2.0 * m0);
    for (int d = 0; d <= spec.num.ball_doublings; ++d, M *= 2.0) {
        double sup = 0.0;
        for (int s = 0; s < spec.num.ball_samples; ++s) {
            double norm = (s == 0) ? M : rng.uniform(0.0, M);
            Trajectory x = random_trajectory_with_norm(g, spec.order(), rng, norm);
            sup = std::max(sup, forcing_pair_norm(spec, x));
        }
        if (sup <= (M - m0) / k) {
            out.verdict = BallCertificate::Verdict::Pass;
            out.radius = M;
            out.bound_used = sup;
            return out;
        }
        out.bound_used = sup;
    }
    out.verdict = BallCertificate::Verdict::Unknown;
    return out;
}

struct SublinearityPoint {
    double norm = 0.0;
    double ratio = 0.0; // max sampled ||(G(x), phi(x))|| / ||x||
};

// Advisory diagnostic for the sublinear-growth route to existence: samples
// the forcing pair at growing norms and reports the trend.
inline std::vector<SublinearityPoint> sublinearity_probe(const ProblemSpec& spec, const Grid& g,
                                                         Rng& rng, int samples_per_norm = 16) {
    std::vector<SublinearityPoint> curve;
    for (double norm : {1e1, 1e2, 1e3, 1e4}) {
        double worst = 0.0;
        for (int s = 0; s < samples_per_norm; ++s) {
            Trajectory x = random_trajectory_with_norm(g, spec.order(), rng, norm);
            worst = std::max(worst, forcing_pair_norm(spec, x) / norm);
        }
        curve.push_back({norm, worst});
    }
    return curve;
}

inline bool sublinear_trend(const std::vector<SublinearityPoint>& curve) {
    bool all_tiny = true;
    for (const auto& p : curve) all_tiny = all_tiny && p.ratio < 1e-12;
    if (all_tiny) return true;
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].ratio >= curve[i - 1].ratio) return false;
    return curve.back().ratio <= 0.1 * curve.front().ratio;
}

struct Certificate {
    // problem shape and run parameters
    int n = 0;
    int m = 0;
    int probes = 0;
    std::uint64_t seed = 0;

    // constants
    double a0 = 0.0;
    double b0 = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double q = 0.0;
    std::optional<double> k;
    std::optional<double> m0;
    BallCertificate ball;

    // verdicts
    bool theorem1 = false;
    enum class T2 { Pass, Fail, Unknown } theorem2 = T2::Unknown;

    // diagnostics
    double normalization_s = 0.0;
    double min_abs_wronskian = 0.0;
    double bmatrix_condition = 0.0;
    double b0_check_max_ratio = 0.0;
    int b0_check_trials = 0;
    double k1_estimate = 0.0;
    double k2_estimate = 0.0;
    std::vector<SublinearityPoint> sublinearity;
    bool sublinearity_ok = false;
    detail::SmallMat bmatrix;
    detail::SmallMat bmatrix_inverse;

    bool k1_consistent() const { return k1_estimate <= k1 * (1.0 + 1e-9) + 1e-12; }
    bool k2_consistent() const { return k2_estimate <= k2 * (1.0 + 1e-9) + 1e-12; }
};

struct CertifiedProblem {
    Certificate cert;
    FundamentalSystem F;
    BoundaryMatrix BM;
};

// Full certification pipeline: fundamental system, boundary matrix, A0,
// contraction constant, Lipschitz constant, zero-data anchor, ball radius,
// sublinearity diagnostic. Throws HypothesisError when a standing
// assumption fails numerically; a failed contraction test is not an error,
// it is a certificate with theorem1 = fail.
inline CertifiedProblem certify_problem(const ProblemSpec& spec) {
    spec.validate();
    Grid g(spec.num.m);
    FundamentalSystem F = fundamental_system(spec.L, g);
    BoundaryMatrix BM = boundary_matrix(spec.B, F.basis());

    Certificate cert;
    cert.n = spec.order();
    cert.m = spec.num.m;
    cert.probes = spec.num.probes;
    cert.seed = spec.num.seed;
    cert.normalization_s = F.normalization();
    cert.min_abs_wronskian = F.min_abs_wronskian();
    cert.bmatrix = BM.entries();
    cert.bmatrix_inverse = BM.inverse();
    cert.bmatrix_condition = BM.condition();
    cert.b0 = BM.b0();

    Rng root(spec.num.seed);
    Rng rng_b0 = root.fork(1);
    Rng rng_lip = root.fork(2);
    Rng rng_ball = root.fork(3);
    Rng rng_sub = root.fork(4);

    B0CheckReport b0chk = b0_bound_check(BM, F.basis(), 1000, rng_b0);
    cert.b0_check_max_ratio = b0chk.max_ratio;
    cert.b0_check_trials = b0chk.trials;

    cert.a0 = compute_A0(F, spec.B, BM, spec.num.probes);
    cert.k1 = spec.k1;
    cert.k2 = spec.k2;
    auto [q, pass] = contraction_certificate(cert.a0, cert.b0, cert.k1, cert.k2);
    cert.q = q;
    cert.theorem1 = pass;

    cert.k1_estimate = spec.psi.uses_x()
                           ? estimate_lipschitz(spec.psi, -10.0, 10.0, spec.num.lipschitz_samples, rng_lip)
                           : 0.0;
    cert.k2_estimate = estimate_lipschitz_eta(spec, g, 200, rng_lip);

    if (cert.theorem1) {
        cert.k = lipschitz_K(cert.a0, cert.b0, cert.q);
        cert.m0 = compute_M0(spec, F, BM, cert.q);
        cert.ball = ball_certificate(spec, F, *cert.k, *cert.m0, rng_ball);
        cert.theorem2 = cert.ball.verdict == BallCertificate::Verdict::Pass
                            ? Certificate::T2::Pass
                            : Certificate::T2::Unknown;
    } else {
        cert.theorem2 = Certificate::T2::Fail;
    }

    cert.sublinearity = sublinearity_probe(spec, g, rng_sub);
    cert.sublinearity_ok = sublinear_trend(cert.sublinearity);

    return {std::move(cert), std::move(F), std::move(BM)};
}

inline std::string format_certificate(const Certificate& c, const std::string& tool_version) {
    std::ostringstream os;
    auto line = [&os](const std::string& key, const std::string& val) {
        os << key << " = " << val << "\n";
    };
    auto fline = [&](const std::string& key, double v) { line(key, format_double(v)); };
    auto mat = [&](const std::string& key, const detail::SmallMat& m) {
        std::string s = "[";
        for (int r = 0; r < m.size(); ++r) {
            s += r ? ",[" : "[";
            for (int cidx = 0; cidx < m.size(); ++cidx)
                s += (cidx ? "," : "") + format_double(m(r, cidx));
            s += "]";
        }
        line(key, s + "]");
    };
    os << "bvpcert-certificate v1\n";
    line("tool_version", tool_version);
    line("n", std::to_string(c.n));
    line("grid_m", std::to_string(c.m));
    line("probes", std::to_string(c.probes));
    line("seed", std::to_string(c.seed));
    fline("a0", c.a0);
    line("a0_status", "numerical");
    fline("b0", c.b0);
    fline("k1_declared", c.k1);
    fline("k1_estimate", c.k1_estimate);
    line("k1_check", c.k1_consistent() ? "ok" : "EXCEEDED: sampled estimate is above the declared constant");
    fline("k2_declared", c.k2);
    fline("k2_estimate", c.k2_estimate);
    line("k2_check", c.k2_consistent() ? "ok" : "EXCEEDED: sampled estimate is above the declared constant");
    fline("q", c.q);
    line("theorem1", c.theorem1 ? "pass" : "fail");
    if (c.k) fline("lipschitz_k", *c.k);
    if (c.m0) fline("m0", *c.m0);
    switch (c.ball.mode) {
        case BallCertificate::Mode::None: line("ball_mode", "none"); break;
        case BallCertificate::Mode::UserBound:
            line("ball_mode", "user_bound");
            fline("ball_bound_c", c.ball.bound_used);
            fline("ball_radius_m", c.ball.radius);
            break;
        case BallCertificate::Mode::Sweep:
            line("ball_mode", "sweep_empirical");
            fline("ball_sampled_sup", c.ball.bound_used);
            if (c.ball.verdict == BallCertificate::Verdict::Pass) fline("ball_radius_m", c.ball.radius);
            break;
    }
    switch (c.theorem2) {
        case Certificate::T2::Pass:
            line("theorem2", c.ball.empirical ? "pass (empirical)" : "pass");
            break;
        case Certificate::T2::Fail: line("theorem2", "fail"); break;
        case Certificate::T2::Unknown: line("theorem2", "unknown"); break;
    }
    {
        std::string s;
        for (const auto& p : c.sublinearity)
            s += (s.empty() ? "" : " ") + format_double(p.norm) + ":" + format_double(p.ratio);
        line("sublinearity_ratios", s);
        line("sublinearity_trend", c.sublinearity_ok ? "decreasing" : "not_decreasing");
    }
    fline("normalization_s", c.normalization_s);
    fline("min_abs_wronskian", c.min_abs_wronskian);
    fline("bmatrix_condition", c.bmatrix_condition);
    fline("b0_check_max_ratio", c.b0_check_max_ratio);
    line("b0_check_trials", std::to_string(c.b0_check_trials));
    mat("bmatrix", c.bmatrix);
    mat("bmatrix_inverse", c.bmatrix_inverse);
    return os.str();
}

} // namespace bvpcert
