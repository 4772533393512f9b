#pragma once

// Random smooth trajectories and forcing samples for the empirical checks:
// low-order Fourier sums with analytic derivative columns, so sampled
// elements are internally consistent to machine precision.

#include <cmath>
#include <vector>

#include "bvpcert/grid.hpp"
#include "bvpcert/rng.hpp"

namespace bvpcert {

struct FourierSeries {
    double a0 = 0.0;
    std::vector<double> ac, as; // coefficients of cos(2 pi k t), sin(2 pi k t)

    double deriv(int j, double t) const {
        double acc = (j == 0) ? a0 : 0.0;
        for (std::size_t k = 0; k < ac.size(); ++k) {
            const double w = 2.0 * M_PI * static_cast<double>(k + 1);
            double a = ac[k], b = as[k];
            for (int d = 0; d < j; ++d) {
                const double na = w * b, nb = -w * a;
                a = na;
                b = nb;
            }
            acc += a * std::cos(w * t) + b * std::sin(w * t);
        }
        return acc;
    }
};

inline FourierSeries random_fourier(Rng& rng, int modes = 3) {
    FourierSeries f;
    f.a0 = rng.uniform(-1.0, 1.0);
    for (int k = 1; k <= modes; ++k) {
        const double decay = 1.0 / (k * k);
        f.ac.push_back(rng.uniform(-1.0, 1.0) * decay);
        f.as.push_back(rng.uniform(-1.0, 1.0) * decay);
    }
    return f;
}

inline Trajectory trajectory_from_series(const FourierSeries& f, const Grid& g, int order) {
    Trajectory x(g, order);
    for (int j = 0; j < order; ++j)
        for (int i = 0; i < g.size(); ++i) x.at(i, j) = f.deriv(j, g.node(i));
    return x;
}

inline Trajectory random_trajectory(const Grid& g, int order, Rng& rng, int modes = 3) {
    return trajectory_from_series(random_fourier(rng, modes), g, order);
}

// Random trajectory rescaled so the nodal sup norm equals `target` exactly.
inline Trajectory random_trajectory_with_norm(const Grid& g, int order, Rng& rng, double target,
                                              int modes = 3) {
    Trajectory x = random_trajectory(g, order, rng, modes);
    double s = x.sup_norm();
    if (s == 0.0) {
        Trajectory c(g, order);
        for (int i = 0; i < g.size(); ++i) c.at(i, 0) = target;
        return c;
    }
    return scaled(target / s, x);
}

inline std::vector<double> random_samples(const Grid& g, Rng& rng, int modes = 3) {
    FourierSeries f = random_fourier(rng, modes);
    std::vector<double> v(g.size());
    for (int i = 0; i < g.size(); ++i) v[i] = f.deriv(0, g.node(i));
    return v;
}

} // namespace bvpcert
