#pragma once

// Bounded-variation integrators for the boundary conditions: finite jumps
// plus an absolutely continuous density, with Riemann-Stieltjes integration
// of trajectory columns. A step of weight beta at t0 contributes beta*f(t0).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "bvpcert/errors.hpp"
#include "bvpcert/expr.hpp"
#include "bvpcert/grid.hpp"

namespace bvpcert {

struct Jump {
    double location = 0.0; // in [0,1]
    double weight = 0.0;
};

class BVMeasure {
public:
    BVMeasure() = default;
    BVMeasure(std::vector<Jump> jumps, std::optional<ScalarExpr> density)
        : jumps_(std::move(jumps)), density_(std::move(density)) {
        normalize();
    }

    static BVMeasure step(double location, double weight) {
        return BVMeasure({{location, weight}}, std::nullopt);
    }
    static BVMeasure zero() { return BVMeasure(); }

    const std::vector<Jump>& jumps() const { return jumps_; }
    const std::optional<ScalarExpr>& density() const { return density_; }
    bool is_zero() const { return jumps_.empty() && !density_; }

    void add_jump(double location, double weight) {
        jumps_.push_back({location, weight});
        normalize();
    }

private:
    // Keep jump locations strictly increasing; coincident jumps merge.
    void normalize() {
        for (const Jump& j : jumps_)
            if (j.location < 0.0 || j.location > 1.0)
                throw ShapeError("jump location outside [0,1]");
        std::sort(jumps_.begin(), jumps_.end(),
                  [](const Jump& a, const Jump& b) { return a.location < b.location; });
        std::vector<Jump> merged;
        for (const Jump& j : jumps_) {
            if (!merged.empty() && merged.back().location == j.location)
                merged.back().weight += j.weight;
            else
                merged.push_back(j);
        }
        jumps_ = std::move(merged);
    }

    std::vector<Jump> jumps_;
    std::optional<ScalarExpr> density_;
};

// Integral of f against the measure; f is sampled on g for the density part
// and evaluated pointwise at jump locations.
inline double stieltjes(const std::function<double(double)>& f, const BVMeasure& w, const Grid& g) {
    double acc = 0.0;
    for (const Jump& j : w.jumps()) acc += j.weight * f(j.location);
    if (w.density()) {
        std::vector<double> prod(g.size());
        for (int i = 0; i < g.size(); ++i) {
            double t = g.node(i);
            prod[i] = f(t) * w.density()->eval(t, 0.0);
        }
        acc += quad(prod, g);
    }
    return acc;
}

// Stieltjes integral of derivative column j of a trajectory, interpolating
// at jump locations that fall between nodes.
inline double stieltjes(const Trajectory& x, int deriv_order, const BVMeasure& w) {
    double acc = 0.0;
    for (const Jump& j : w.jumps()) acc += j.weight * x.eval(j.location, deriv_order);
    if (w.density()) {
        const Grid& g = x.grid();
        std::vector<double> prod(g.size());
        for (int i = 0; i < g.size(); ++i)
            prod[i] = x.value(i, deriv_order) * w.density()->eval(g.node(i), 0.0);
        acc += quad(prod, g);
    }
    return acc;
}

inline double total_variation(const BVMeasure& w, const Grid& g) {
    double acc = 0.0;
    for (const Jump& j : w.jumps()) acc += std::fabs(j.weight);
    if (w.density()) {
        std::vector<double> a(g.size());
        for (int i = 0; i < g.size(); ++i) a[i] = std::fabs(w.density()->eval(g.node(i), 0.0));
        acc += quad(a, g);
    }
    return acc;
}

// Measures realizing the multipoint boundary operator sum_i B_i xbar(t_i):
// omega_{rc} gets a jump of weight (B_i)_{rc} at each t_i.
inline std::vector<std::vector<BVMeasure>> from_multipoint(
    const std::vector<double>& points, const std::vector<std::vector<std::vector<double>>>& matrices) {
    if (points.size() != matrices.size())
        throw ShapeError("multipoint: need one matrix per point");
    if (points.empty()) throw ShapeError("multipoint: no points");
    const std::size_t n = matrices[0].size();
    for (const auto& mat : matrices) {
        if (mat.size() != n) throw ShapeError("multipoint: matrix row count mismatch");
        for (const auto& row : mat)
            if (row.size() != n) throw ShapeError("multipoint: matrix must be square");
    }
    std::vector<std::vector<BVMeasure>> omega(n, std::vector<BVMeasure>(n));
    for (std::size_t q = 0; q < points.size(); ++q)
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                if (matrices[q][r][c] != 0.0)
                    omega[r][c].add_jump(points[q], matrices[q][r][c]);
    return omega;
}

} // namespace bvpcert
