#pragma once

// Discrete stand-in for n-times continuously differentiable functions on
// [0,1]: uniform-grid trajectories carrying the function and its derivatives
// up to order n-1, with Hermite interpolation, the nodal sup norm, and
// composite-Simpson quadrature.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bvpcert/errors.hpp"

namespace bvpcert {

class Grid {
public:
    explicit Grid(int m) : m_(m) {
        if (m < 2) throw ShapeError("grid needs at least 2 nodes");
    }

    int size() const { return m_; }
    double spacing() const { return 1.0 / (m_ - 1); }
    double node(int i) const { return static_cast<double>(i) / (m_ - 1); }

    bool operator==(const Grid& o) const { return m_ == o.m_; }

private:
    int m_;
};

// Column j holds x^(j) at the nodes, j = 0..order-1. Treated as an immutable
// value once built; all operations are pure.
class Trajectory {
public:
    Trajectory(Grid grid, int order)
        : grid_(grid), order_(order),
          v_(static_cast<std::size_t>(grid.size()) * order, 0.0) {
        if (order < 1) throw ShapeError("trajectory order must be >= 1");
    }

    const Grid& grid() const { return grid_; }
    int order() const { return order_; }
    int nodes() const { return grid_.size(); }

    double value(int i, int j) const { return v_[idx(i, j)]; }
    double& at(int i, int j) { return v_[idx(i, j)]; }

    std::span<const double> column(int j) const {
        return {v_.data() + static_cast<std::size_t>(j) * grid_.size(),
                static_cast<std::size_t>(grid_.size())};
    }

    // Cubic Hermite interpolation of column j with column j+1 as slope data;
    // linear interpolation for the top derivative. Node hits return the
    // stored value bitwise.
    double eval(double t, int j = 0) const {
        if (j < 0 || j >= order_)
            throw ShapeError("derivative order " + std::to_string(j) +
                             " out of range for trajectory of order " + std::to_string(order_));
        if (t < 0.0 || t > 1.0)
            throw ShapeError("evaluation point outside [0,1]");
        const int m = grid_.size();
        const int near = static_cast<int>(std::llround(t * (m - 1)));
        if (near >= 0 && near < m && t == grid_.node(near)) return value(near, j);
        int i = static_cast<int>(t * (m - 1));
        i = std::clamp(i, 0, m - 2);
        const double h = grid_.spacing();
        const double s = (t - grid_.node(i)) / h;
        const double y0 = value(i, j), y1 = value(i + 1, j);
        if (j + 1 >= order_) return y0 + s * (y1 - y0);
        const double d0 = value(i, j + 1), d1 = value(i + 1, j + 1);
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 +
               (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
    }

    // Nodal max of |x| (column 0): the discrete proxy for the sup norm.
    double sup_norm() const {
        double best = 0.0;
        for (int i = 0; i < grid_.size(); ++i) best = std::max(best, std::fabs(value(i, 0)));
        return best;
    }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(j) * grid_.size() + i;
    }

    Grid grid_;
    int order_;
    std::vector<double> v_;
};

// Composite Simpson when the panel count is even (m odd); otherwise Simpson
// on the leading panels plus one trapezoid panel at the right end.
inline double quad(std::span<const double> f, const Grid& g) {
    const int m = g.size();
    if (static_cast<int>(f.size()) != m) throw ShapeError("quad: sample count does not match grid");
    const double h = g.spacing();
    if (m == 2) return 0.5 * h * (f[0] + f[1]);
    const int panels = m - 1;
    const int simpson_end = (panels % 2 == 0) ? m - 1 : m - 2;
    double acc = f[0] + f[simpson_end];
    for (int i = 1; i < simpson_end; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f[i];
    double result = h * (acc / 3.0);
    if (simpson_end != m - 1) result += 0.5 * h * (f[m - 2] + f[m - 1]);
    return result;
}

// Running integral: I[i] = integral of f from 0 to node i. Even nodes use
// composite Simpson; odd nodes add the quadratic-fit half panel, keeping the
// whole curve fourth order.
inline std::vector<double> cumquad(std::span<const double> f, const Grid& g) {
    const int m = g.size();
    if (static_cast<int>(f.size()) != m) throw ShapeError("cumquad: sample count does not match grid");
    const double h = g.spacing();
    std::vector<double> I(m, 0.0);
    if (m == 2) { I[1] = 0.5 * h * (f[0] + f[1]); return I; }
    I[1] = h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]);
    for (int i = 2; i < m; ++i) {
        if (i % 2 == 0)
            I[i] = I[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
        else
            I[i] = I[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
    }
    return I;
}

// Entrywise alpha*x + y.
inline Trajectory axpy(double alpha, const Trajectory& x, const Trajectory& y) {
    if (!(x.grid() == y.grid()) || x.order() != y.order())
        throw ShapeError("axpy: trajectory shapes differ");
    Trajectory r(x.grid(), x.order());
    for (int j = 0; j < x.order(); ++j)
        for (int i = 0; i < x.nodes(); ++i)
            r.at(i, j) = alpha * x.value(i, j) + y.value(i, j);
    return r;
}

inline Trajectory scaled(double alpha, const Trajectory& x) {
    return axpy(alpha, x, Trajectory(x.grid(), x.order()));
}

// Max deviation, per derivative pair, between column j and the running
// integral of column j+1 anchored at the left endpoint.
inline std::vector<double> consistency_defects(const Trajectory& x) {
    std::vector<double> out;
    for (int j = 0; j + 1 < x.order(); ++j) {
        std::vector<double> I = cumquad(x.column(j + 1), x.grid());
        double worst = 0.0;
        for (int i = 0; i < x.nodes(); ++i)
            worst = std::max(worst, std::fabs(x.value(i, j) - (x.value(0, j) + I[i])));
        out.push_back(worst);
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV with header t,x,x1,...,x{n-1}, one row per node, full double precision.
inline void write_csv(std::ostream& os, const Trajectory& x) {
    os << "t,x";
    for (int j = 1; j < x.order(); ++j) os << ",x" << j;
    os << "\n";
    for (int i = 0; i < x.nodes(); ++i) {
        os << format_double(x.grid().node(i));
        for (int j = 0; j < x.order(); ++j) os << "," << format_double(x.value(i, j));
        os << "\n";
    }
}

inline Trajectory read_csv(std::istream& is) {
    std::string line;
    do {
        if (!std::getline(is, line)) throw ShapeError("csv: empty file");
    } while (!line.empty() && line[0] == '#');
    int cols = 1;
    for (char c : line)
        if (c == ',') ++cols;
    if (cols < 2 || line.rfind("t,x", 0) != 0) throw ShapeError("csv: bad header, expected t,x,...");
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ShapeError("csv: bad number '" + cell + "'");
            }
        }
        if (static_cast<int>(row.size()) != cols)
            throw ShapeError("csv: ragged row with " + std::to_string(row.size()) + " cells");
        rows.push_back(std::move(row));
    }
    const int m = static_cast<int>(rows.size());
    if (m < 2) throw ShapeError("csv: needs at least 2 rows");
    Grid g(m);
    Trajectory x(g, cols - 1);
    for (int i = 0; i < m; ++i) {
        if (std::fabs(rows[i][0] - g.node(i)) > 1e-9 * std::max(1, m))
            throw ShapeError("csv: t column is not the uniform grid on [0,1]");
        for (int j = 0; j + 1 < cols; ++j) x.at(i, j) = rows[i][j + 1];
    }
    return x;
}

} // namespace bvpcert
