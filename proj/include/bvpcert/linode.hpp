#pragma once

// Linear core of the method: fundamental system of the kernel of L with
// Wronskian data, the variation-of-parameters particular solution, and the
// solve for the paired operator (L, B).
//
// The kernel basis is integrated from canonical initial data xbar(0) = e_i
// with the classical fourth-order one-step method on the companion system,
// then uniformly rescaled so the sup norms of the basis sum to at most one.
// W_k(t) is the determinant of the nodal Wronskian matrix with column k
// replaced by e_n; by Cramer's rule sum_k u_k^(j) W_k / W vanishes for
// j < n-1, so every derivative column of the particular solution is
// x_p^(j) = sum_k u_k^(j) I_k with the same running integrals I_k.

#include <cmath>
#include <span>
#include <vector>

#include "bvpcert/boundary.hpp"
#include "bvpcert/detail/smallmat.hpp"
#include "bvpcert/errors.hpp"
#include "bvpcert/expr.hpp"
#include "bvpcert/grid.hpp"

namespace bvpcert {

class LinearOperator {
public:
    LinearOperator(int order, std::vector<ScalarExpr> coeff)
        : order_(order), coeff_(std::move(coeff)) {
        if (order_ < 1 || order_ > 6)
            throw ShapeError("operator order must be between 1 and 6");
        if (static_cast<int>(coeff_.size()) != order_ + 1)
            throw ShapeError("operator of order n needs coefficients a0..an");
        for (const ScalarExpr& c : coeff_)
            if (c.uses_x()) throw SchemaError("operator coefficients must depend on t only");
    }

    int order() const { return order_; }
    double coeff(int i, double t) const { return coeff_[i].eval(t, 0.0); }
    const ScalarExpr& coeff_expr(int i) const { return coeff_[i]; }

    // a_n must keep one sign on the whole grid.
    void check_leading(const Grid& g) const {
        double first = coeff(order_, g.node(0));
        if (first == 0.0 || !std::isfinite(first))
            throw HypothesisError("leading coefficient vanishes at t=0");
        for (int i = 1; i < g.size(); ++i) {
            double v = coeff(order_, g.node(i));
            if (v == 0.0 || !std::isfinite(v) || (v > 0) != (first > 0))
                throw HypothesisError("leading coefficient vanishes or changes sign on the grid (t=" +
                                      format_double(g.node(i)) + ")");
        }
    }

private:
    int order_;
    std::vector<ScalarExpr> coeff_;
};

class FundamentalSystem {
public:
    FundamentalSystem(Grid grid, int n, std::vector<Trajectory> basis, double s,
                      std::vector<double> wronskian, std::vector<std::vector<double>> wk,
                      std::vector<double> an)
        : grid_(grid), n_(n), basis_(std::move(basis)), s_(s),
          wronskian_(std::move(wronskian)), wk_(std::move(wk)), an_(std::move(an)) {
        min_abs_w_ = std::fabs(wronskian_[0]);
        for (double w : wronskian_) min_abs_w_ = std::min(min_abs_w_, std::fabs(w));
    }

    const Grid& grid() const { return grid_; }
    int order() const { return n_; }
    std::span<const Trajectory> basis() const { return basis_; }
    const Trajectory& basis_element(int k) const { return basis_[k]; }
    double normalization() const { return s_; }
    double wronskian(int i) const { return wronskian_[i]; }
    double wk(int k, int i) const { return wk_[k][i]; }
    double an(int i) const { return an_[i]; }
    double min_abs_wronskian() const { return min_abs_w_; }

private:
    Grid grid_;
    int n_;
    std::vector<Trajectory> basis_;
    double s_;
    std::vector<double> wronskian_;
    std::vector<std::vector<double>> wk_;
    std::vector<double> an_;
    double min_abs_w_;
};

namespace detail {

// Companion-system right-hand side for Lx = 0.
inline void kernel_rhs(const LinearOperator& L, double t, const double* y, double* dy) {
    const int n = L.order();
    for (int j = 0; j + 1 < n; ++j) dy[j] = y[j + 1];
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += L.coeff(j, t) * y[j];
    dy[n - 1] = -acc / L.coeff(n, t);
}

inline Trajectory integrate_kernel_ivp(const LinearOperator& L, const Grid& g, int unit_index) {
    const int n = L.order();
    const int m = g.size();
    const double h = g.spacing();
    Trajectory u(g, n);
    std::vector<double> y(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);
    y[unit_index] = 1.0;
    for (int j = 0; j < n; ++j) u.at(0, j) = y[j];
    for (int i = 0; i + 1 < m; ++i) {
        const double t = g.node(i);
        kernel_rhs(L, t, y.data(), k1.data());
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
        kernel_rhs(L, t + 0.5 * h, tmp.data(), k2.data());
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
        kernel_rhs(L, t + 0.5 * h, tmp.data(), k3.data());
        for (int j = 0; j < n; ++j) tmp[j] = y[j] + h * k3[j];
        kernel_rhs(L, t + h, tmp.data(), k4.data());
        for (int j = 0; j < n; ++j)
            y[j] += h * ((k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0);
        for (int j = 0; j < n; ++j) {
            if (!std::isfinite(y[j]))
                throw HypothesisError("non-finite state while integrating the kernel basis");
            u.at(i + 1, j) = y[j];
        }
    }
    return u;
}

} // namespace detail

inline FundamentalSystem fundamental_system(const LinearOperator& L, const Grid& g) {
    L.check_leading(g);
    const int n = L.order();
    const int m = g.size();

    std::vector<Trajectory> basis;
    basis.reserve(n);
    for (int k = 0; k < n; ++k) basis.push_back(detail::integrate_kernel_ivp(L, g, k));

    double s = 0.0;
    for (const Trajectory& u : basis) s += u.sup_norm();
    std::vector<Trajectory> scaled_basis;
    scaled_basis.reserve(n);
    for (const Trajectory& u : basis) scaled_basis.push_back(scaled(1.0 / s, u));

    std::vector<double> wr(m);
    std::vector<std::vector<double>> wk(n, std::vector<double>(m));
    std::vector<double> an(m);
    detail::SmallMat mat(n);
    for (int i = 0; i < m; ++i) {
        for (int r = 0; r < n; ++r)
            for (int k = 0; k < n; ++k) mat(r, k) = scaled_basis[k].value(i, r);
        wr[i] = detail::determinant(mat);
        if (wr[i] == 0.0 || !std::isfinite(wr[i]))
            throw HypothesisError("Wronskian vanishes at t=" + format_double(g.node(i)));
        for (int k = 0; k < n; ++k) {
            detail::SmallMat rep = mat;
            for (int r = 0; r < n; ++r) rep(r, k) = (r == n - 1) ? 1.0 : 0.0;
            wk[k][i] = detail::determinant(rep);
        }
        an[i] = L.coeff(n, g.node(i));
    }
    return FundamentalSystem(g, n, std::move(scaled_basis), s, std::move(wr), std::move(wk),
                             std::move(an));
}

// Variation of parameters: x_p(t) = sum_k u_k(t) * integral_0^t h W_k / (a_n W).
inline Trajectory particular_solution(const FundamentalSystem& F, std::span<const double> h) {
    const int n = F.order();
    const int m = F.grid().size();
    if (static_cast<int>(h.size()) != m)
        throw ShapeError("particular_solution: forcing sample count does not match grid");
    Trajectory xp(F.grid(), n);
    std::vector<double> integrand(m);
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < m; ++i) integrand[i] = h[i] * F.wk(k, i) / (F.an(i) * F.wronskian(i));
        std::vector<double> I = cumquad(integrand, F.grid());
        const Trajectory& u = F.basis_element(k);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < m; ++i) xp.at(i, j) += u.value(i, j) * I[i];
    }
    if (!xp.all_finite())
        throw HypothesisError("non-finite particular solution (ill-conditioned fundamental system)");
    return xp;
}

// x = x_p + sum_i d_i u_i with d solving (boundary matrix) d = v - B(x_p).
inline Trajectory solve_linear_bvp(const FundamentalSystem& F, const BoundaryOperator& B,
                                   const BoundaryMatrix& BM, std::span<const double> h,
                                   const std::vector<double>& v) {
    const int n = F.order();
    if (static_cast<int>(v.size()) != n)
        throw ShapeError("solve_linear_bvp: boundary value count != n");
    Trajectory x = particular_solution(F, h);
    std::vector<double> rhs = apply_B(B, x);
    for (int i = 0; i < n; ++i) rhs[i] = v[i] - rhs[i];
    std::vector<double> d = BM.solve(rhs);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < x.nodes(); ++i)
                x.at(i, j) += d[k] * F.basis_element(k).value(i, j);
    return x;
}

} // namespace bvpcert
