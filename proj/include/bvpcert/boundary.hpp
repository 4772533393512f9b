#pragma once

// The linear boundary operator B, the matrix formed by applying it to a
// kernel basis, and the constant bounding the basis combination map v ->
// u^T B^{-1} v. Row i of B is x -> sum_j integral of x^(j-1) d omega_{ij}.

#include <cmath>
#include <span>
#include <vector>

#include "bvpcert/detail/smallmat.hpp"
#include "bvpcert/errors.hpp"
#include "bvpcert/grid.hpp"
#include "bvpcert/measure.hpp"
#include "bvpcert/rng.hpp"

namespace bvpcert {

class BoundaryOperator {
public:
    BoundaryOperator(int n, std::vector<std::vector<BVMeasure>> omega)
        : n_(n), omega_(std::move(omega)) {
        if (static_cast<int>(omega_.size()) != n_) throw ShapeError("boundary operator: row count != n");
        for (const auto& row : omega_)
            if (static_cast<int>(row.size()) != n_)
                throw ShapeError("boundary operator: column count != n");
    }

    static BoundaryOperator zero(int n) {
        return BoundaryOperator(n, std::vector<std::vector<BVMeasure>>(n, std::vector<BVMeasure>(n)));
    }

    int order() const { return n_; }
    const BVMeasure& omega(int i, int j) const { return omega_[i][j]; }
    BVMeasure& omega(int i, int j) { return omega_[i][j]; }

private:
    int n_;
    std::vector<std::vector<BVMeasure>> omega_; // omega_[i][j] acts on x^(j)
};

inline std::vector<double> apply_B(const BoundaryOperator& B, const Trajectory& x) {
    if (x.order() < B.order())
        throw ShapeError("apply_B: trajectory carries fewer derivatives than the boundary operator needs");
    std::vector<double> v(B.order(), 0.0);
    for (int i = 0; i < B.order(); ++i)
        for (int j = 0; j < B.order(); ++j)
            if (!B.omega(i, j).is_zero()) v[i] += stieltjes(x, j, B.omega(i, j));
    return v;
}

class BoundaryMatrix {
public:
    BoundaryMatrix(detail::SmallMat entries, double cond_threshold = 1e12)
        : entries_(entries), lu_(detail::lu_factor(entries)) {
        if (lu_.singular)
            throw HypothesisError("boundary matrix is singular: the invertibility hypothesis fails");
        inverse_ = detail::inverse(lu_);
        b0_ = inverse_.inf_norm();
        cond_ = entries_.inf_norm() * b0_;
        if (!(cond_ < cond_threshold))
            throw HypothesisError("boundary matrix condition estimate " + format_double(cond_) +
                                  " exceeds " + format_double(cond_threshold) +
                                  ": treating the invertibility hypothesis as violated");
    }

    int order() const { return entries_.size(); }
    const detail::SmallMat& entries() const { return entries_; }
    const detail::SmallMat& inverse() const { return inverse_; }
    double b0() const { return b0_; }
    double condition() const { return cond_; }

    std::vector<double> solve(const std::vector<double>& rhs) const {
        return detail::lu_solve(lu_, rhs);
    }

private:
    detail::SmallMat entries_;
    detail::LuFactors lu_;
    detail::SmallMat inverse_;
    double b0_ = 0.0;
    double cond_ = 0.0;
};

// Column k is B applied to basis element k. The basis is expected to be the
// normalized kernel basis.
inline BoundaryMatrix boundary_matrix(const BoundaryOperator& B,
                                      std::span<const Trajectory> basis) {
    const int n = B.order();
    if (static_cast<int>(basis.size()) != n)
        throw ShapeError("boundary_matrix: basis size != n");
    detail::SmallMat m(n);
    for (int k = 0; k < n; ++k) {
        std::vector<double> col = apply_B(B, basis[k]);
        for (int r = 0; r < n; ++r) m(r, k) = col[r];
    }
    return BoundaryMatrix(m);
}

struct B0CheckReport {
    int trials = 0;
    double max_ratio = 0.0; // sup-norm of the combination over |v|_inf
    bool ok = true;
};

// Random-v verification of ||u^T B^{-1} v|| <= b0 |v|: relies on the basis
// normalization sum ||u_i|| <= 1.
inline B0CheckReport b0_bound_check(const BoundaryMatrix& BM,
                                    std::span<const Trajectory> basis, int trials, Rng& rng) {
    B0CheckReport rep;
    rep.trials = trials;
    const int n = BM.order();
    for (int t = 0; t < trials; ++t) {
        std::vector<double> v(n);
        double vnorm = 0.0;
        for (int i = 0; i < n; ++i) {
            v[i] = rng.uniform(-1.0, 1.0);
            vnorm = std::max(vnorm, std::fabs(v[i]));
        }
        if (vnorm == 0.0) continue;
        std::vector<double> d = BM.solve(v);
        double combo_norm = 0.0;
        for (int i = 0; i < basis[0].nodes(); ++i) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += d[k] * basis[k].value(i, 0);
            combo_norm = std::max(combo_norm, std::fabs(s));
        }
        double ratio = combo_norm / vnorm;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > BM.b0() * (1.0 + 1e-10) + 1e-10) rep.ok = false;
    }
    return rep;
}

} // namespace bvpcert
