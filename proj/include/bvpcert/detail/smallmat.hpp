#pragma once

// Dense linear algebra for the small (n <= 8) matrices appearing in the
// boundary machinery: LU with partial pivoting, determinant, inverse,
// infinity-norm condition estimate.

#include <cmath>
#include <cstddef>
#include <vector>

#include "bvpcert/errors.hpp"

namespace bvpcert::detail {

class SmallMat {
public:
    SmallMat() : n_(0) {}
    explicit SmallMat(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

    int size() const { return n_; }
    double& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * n_ + c]; }
    double operator()(int r, int c) const { return a_[static_cast<std::size_t>(r) * n_ + c]; }

    static SmallMat identity(int n) {
        SmallMat m(n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double inf_norm() const {
        double best = 0.0;
        for (int r = 0; r < n_; ++r) {
            double s = 0.0;
            for (int c = 0; c < n_; ++c) s += std::fabs((*this)(r, c));
            if (s > best) best = s;
        }
        return best;
    }

private:
    int n_;
    std::vector<double> a_;
};

struct LuFactors {
    SmallMat lu;
    std::vector<int> perm;
    int sign = 1;
    bool singular = false;
};

inline LuFactors lu_factor(SmallMat m) {
    const int n = m.size();
    LuFactors f{std::move(m), std::vector<int>(n), 1, false};
    for (int i = 0; i < n; ++i) f.perm[i] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::fabs(f.lu(k, k));
        for (int r = k + 1; r < n; ++r) {
            double v = std::fabs(f.lu(r, k));
            if (v > best) { best = v; piv = r; }
        }
        if (best == 0.0) { f.singular = true; return f; }
        if (piv != k) {
            for (int c = 0; c < n; ++c) std::swap(f.lu(k, c), f.lu(piv, c));
            std::swap(f.perm[k], f.perm[piv]);
            f.sign = -f.sign;
        }
        for (int r = k + 1; r < n; ++r) {
            f.lu(r, k) /= f.lu(k, k);
            for (int c = k + 1; c < n; ++c) f.lu(r, c) -= f.lu(r, k) * f.lu(k, c);
        }
    }
    return f;
}

inline double determinant(const SmallMat& m) {
    LuFactors f = lu_factor(m);
    if (f.singular) return 0.0;
    double d = f.sign;
    for (int i = 0; i < m.size(); ++i) d *= f.lu(i, i);
    return d;
}

inline std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& b) {
    const int n = f.lu.size();
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[static_cast<std::size_t>(f.perm[i])];
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
        x[i] /= f.lu(i, i);
    }
    return x;
}

inline SmallMat inverse(const LuFactors& f) {
    const int n = f.lu.size();
    SmallMat inv(n);
    std::vector<double> e(n, 0.0);
    for (int c = 0; c < n; ++c) {
        e.assign(n, 0.0);
        e[c] = 1.0;
        std::vector<double> col = lu_solve(f, e);
        for (int r = 0; r < n; ++r) inv(r, c) = col[r];
    }
    return inv;
}

} // namespace bvpcert::detail
