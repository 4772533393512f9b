#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bvpcert/bvpcert.hpp"

namespace fixtures {

using namespace bvpcert;

inline LinearOperator second_derivative() {
    return LinearOperator(2, {parse_scalar("0"), parse_scalar("0"), parse_scalar("1")});
}

inline LinearOperator first_derivative() {
    return LinearOperator(1, {parse_scalar("0"), parse_scalar("1")});
}

// Row 0 evaluates x(0), row 1 evaluates x(1).
inline BoundaryOperator dirichlet2() {
    BoundaryOperator B = BoundaryOperator::zero(2);
    B.omega(0, 0) = BVMeasure::step(0.0, 1.0);
    B.omega(1, 0) = BVMeasure::step(1.0, 1.0);
    return B;
}

inline ProblemSpec make_spec(LinearOperator L, BoundaryOperator B, const std::string& psi,
                             const std::vector<std::string>& eta,
                             const std::vector<std::string>& phi, GOperator G, double k1,
                             double k2, std::optional<double> C, int m, double tol = 1e-8) {
    std::vector<FunctionalExpr> ev, pv;
    for (const std::string& s : eta) ev.push_back(parse_functional(s));
    for (const std::string& s : phi) pv.push_back(parse_functional(s));
    Numerics num;
    num.m = m;
    num.tol = tol;
    ProblemSpec spec{std::move(L), std::move(B), parse_scalar(psi), std::move(ev), std::move(pv),
                     std::move(G),  k1,           k2,               C,             num,
                     {},            {}};
    spec.validate();
    return spec;
}

// x'' + 0.1 sin(x) = h with x(0) = v1 and x(1) + 0.05 atan(x(0.5)) = v2.
inline ProblemSpec semilinear_multipoint(int m = 1001, double tol = 1e-8) {
    return make_spec(second_derivative(), dirichlet2(), "0.1*sin(x)",
                     {"0", "0.05*atan(x(0.5))"}, {"0", "0"}, GOperator{}, 0.1, 0.05, std::nullopt,
                     m, tol);
}

// x'' + 0.1 sin(x) = integral of sin(x(s)) ds, Dirichlet, declared bound 1.
inline ProblemSpec bounded_g(int m = 1001, double tol = 1e-6) {
    GOperator G;
    G.kind = GOperator::Kind::IntegralKernel;
    G.expr = parse_scalar("sin(x)");
    return make_spec(second_derivative(), dirichlet2(), "0.1*sin(x)", {"0", "0"}, {"0", "0"},
                     std::move(G), 0.1, 0.0, 1.0, m, tol);
}

// Linear x'' = 1 with homogeneous Dirichlet data, forcing carried by G.
inline ProblemSpec linear_forced(int m = 1001, double tol = 1e-8) {
    GOperator G;
    G.kind = GOperator::Kind::Pointwise;
    G.expr = parse_scalar("1");
    return make_spec(second_derivative(), dirichlet2(), "0", {"0", "0"}, {"0", "0"}, std::move(G),
                     0.0, 0.0, std::nullopt, m, tol);
}

// Trajectory with columns filled from closed-form derivative callables.
inline Trajectory sample_trajectory(const Grid& g,
                                    const std::vector<std::function<double(double)>>& derivs) {
    Trajectory x(g, static_cast<int>(derivs.size()));
    for (int j = 0; j < x.order(); ++j)
        for (int i = 0; i < g.size(); ++i) x.at(i, j) = derivs[j](g.node(i));
    return x;
}

inline double sup_diff(const Trajectory& a, const Trajectory& b) {
    double worst = 0.0;
    for (int i = 0; i < a.nodes(); ++i)
        worst = std::max(worst, std::fabs(a.value(i, 0) - b.value(i, 0)));
    return worst;
}

inline double sup_diff(const Trajectory& a, const std::function<double(double)>& f) {
    double worst = 0.0;
    for (int i = 0; i < a.nodes(); ++i)
        worst = std::max(worst, std::fabs(a.value(i, 0) - f(a.grid().node(i))));
    return worst;
}

} // namespace fixtures
