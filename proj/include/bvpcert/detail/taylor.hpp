#pragma once

// Truncated Taylor-series arithmetic over the expression catalog. Propagating
// series through an expression in t gives its derivatives at a point to
// machine precision, which the manufactured-solution harness needs for
// building forcing terms without symbolic differentiation.

#include <array>
#include <cmath>
#include <vector>

#include "bvpcert/errors.hpp"
#include "bvpcert/expr.hpp"

namespace bvpcert::detail {

inline constexpr int kTaylorMax = 9;

struct Taylor {
    int len = 1; // number of coefficients carried
    std::array<double, kTaylorMax> c{};

    static Taylor constant(double v, int len) {
        Taylor r;
        r.len = len;
        r.c[0] = v;
        return r;
    }
    static Taylor variable(double v, int len) {
        Taylor r = constant(v, len);
        if (len > 1) r.c[1] = 1.0;
        return r;
    }
};

inline Taylor t_add(const Taylor& a, const Taylor& b) {
    Taylor r = a;
    for (int i = 0; i < a.len; ++i) r.c[i] += b.c[i];
    return r;
}

inline Taylor t_sub(const Taylor& a, const Taylor& b) {
    Taylor r = a;
    for (int i = 0; i < a.len; ++i) r.c[i] -= b.c[i];
    return r;
}

inline Taylor t_neg(const Taylor& a) {
    Taylor r = a;
    for (int i = 0; i < a.len; ++i) r.c[i] = -r.c[i];
    return r;
}

inline Taylor t_mul(const Taylor& a, const Taylor& b) {
    Taylor r = Taylor::constant(0.0, a.len);
    for (int i = 0; i < a.len; ++i)
        for (int j = 0; i + j < a.len; ++j) r.c[i + j] += a.c[i] * b.c[j];
    return r;
}

inline Taylor t_div(const Taylor& a, const Taylor& b, const NodePtr& ctx) {
    if (b.c[0] == 0.0) eval_fail("division by zero", ctx);
    Taylor r = Taylor::constant(0.0, a.len);
    for (int k = 0; k < a.len; ++k) {
        double s = a.c[k];
        for (int i = 0; i < k; ++i) s -= r.c[i] * b.c[k - i];
        r.c[k] = s / b.c[0];
    }
    return r;
}

inline Taylor t_exp(const Taylor& u) {
    Taylor v = Taylor::constant(0.0, u.len);
    v.c[0] = std::exp(u.c[0]);
    for (int k = 1; k < u.len; ++k) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i) s += i * u.c[i] * v.c[k - i];
        v.c[k] = s / k;
    }
    return v;
}

inline Taylor t_log(const Taylor& u, const NodePtr& ctx) {
    if (u.c[0] <= 0.0) eval_fail("log of a non-positive value", ctx);
    Taylor v = Taylor::constant(0.0, u.len);
    v.c[0] = std::log(u.c[0]);
    for (int k = 1; k < u.len; ++k) {
        double s = k * u.c[k];
        for (int i = 1; i < k; ++i) s -= i * v.c[i] * u.c[k - i];
        v.c[k] = s / (k * u.c[0]);
    }
    return v;
}

inline void t_sincos(const Taylor& u, Taylor& s, Taylor& c) {
    s = Taylor::constant(0.0, u.len);
    c = Taylor::constant(0.0, u.len);
    s.c[0] = std::sin(u.c[0]);
    c.c[0] = std::cos(u.c[0]);
    for (int k = 1; k < u.len; ++k) {
        double as = 0.0, ac = 0.0;
        for (int i = 1; i <= k; ++i) {
            as += i * u.c[i] * c.c[k - i];
            ac += i * u.c[i] * s.c[k - i];
        }
        s.c[k] = as / k;
        c.c[k] = -ac / k;
    }
}

inline Taylor t_sqrt(const Taylor& u, const NodePtr& ctx) {
    if (u.c[0] < 0.0) eval_fail("sqrt of a negative value", ctx);
    if (u.c[0] == 0.0) eval_fail("sqrt series at zero is not differentiable", ctx);
    Taylor v = Taylor::constant(0.0, u.len);
    v.c[0] = std::sqrt(u.c[0]);
    for (int k = 1; k < u.len; ++k) {
        double s = u.c[k];
        for (int i = 1; i < k; ++i) s -= v.c[i] * v.c[k - i];
        v.c[k] = s / (2.0 * v.c[0]);
    }
    return v;
}

// v' (1+u^2) = u'
inline Taylor t_atan(const Taylor& u) {
    Taylor w = t_add(Taylor::constant(1.0, u.len), t_mul(u, u));
    Taylor v = Taylor::constant(0.0, u.len);
    v.c[0] = std::atan(u.c[0]);
    for (int k = 1; k < u.len; ++k) {
        double s = k * u.c[k];
        for (int i = 1; i < k; ++i) s -= i * v.c[i] * w.c[k - i];
        v.c[k] = s / (k * w.c[0]);
    }
    return v;
}

// v' = u' (1 - v^2); w = 1 - v^2 is filled alongside v.
inline Taylor t_tanh(const Taylor& u) {
    Taylor v = Taylor::constant(0.0, u.len);
    Taylor w = Taylor::constant(0.0, u.len);
    v.c[0] = std::tanh(u.c[0]);
    w.c[0] = 1.0 - v.c[0] * v.c[0];
    for (int k = 1; k < u.len; ++k) {
        double s = 0.0;
        for (int i = 1; i <= k; ++i) s += i * u.c[i] * w.c[k - i];
        v.c[k] = s / k;
        double q = 0.0;
        for (int i = 0; i <= k; ++i) q += v.c[i] * v.c[k - i];
        w.c[k] = -q;
    }
    return v;
}

inline Taylor t_abs(const Taylor& u, const NodePtr& ctx) {
    if (u.c[0] == 0.0) eval_fail("abs series at zero is not differentiable", ctx);
    return u.c[0] > 0.0 ? u : t_neg(u);
}

inline Taylor t_ipow(const Taylor& u, long n) {
    Taylor r = Taylor::constant(1.0, u.len);
    Taylor base = u;
    long k = n;
    while (k > 0) {
        if (k & 1) r = t_mul(r, base);
        base = t_mul(base, base);
        k >>= 1;
    }
    return r;
}

inline Taylor t_pow(const Taylor& u, const Taylor& e, const NodePtr& ctx) {
    bool const_exp = true;
    for (int i = 1; i < e.len; ++i)
        if (e.c[i] != 0.0) const_exp = false;
    if (!const_exp) return t_exp(t_mul(e, t_log(u, ctx)));
    double ex = e.c[0];
    if (ex == std::floor(ex) && std::fabs(ex) <= 64) {
        long n = static_cast<long>(ex);
        if (n >= 0) return t_ipow(u, n);
        return t_div(Taylor::constant(1.0, u.len), t_ipow(u, -n), ctx);
    }
    if (u.c[0] <= 0.0) eval_fail("non-integer power of a non-positive base", ctx);
    return t_exp(t_mul(Taylor::constant(ex, u.len), t_log(u, ctx)));
}

inline Taylor taylor_eval(const NodePtr& n, const Taylor& tvar) {
    switch (n->kind) {
        case NodeKind::Number: return Taylor::constant(n->number, tvar.len);
        case NodeKind::VarT: return tvar;
        case NodeKind::Neg: return t_neg(taylor_eval(n->a, tvar));
        case NodeKind::Add: return t_add(taylor_eval(n->a, tvar), taylor_eval(n->b, tvar));
        case NodeKind::Sub: return t_sub(taylor_eval(n->a, tvar), taylor_eval(n->b, tvar));
        case NodeKind::Mul: return t_mul(taylor_eval(n->a, tvar), taylor_eval(n->b, tvar));
        case NodeKind::Div: return t_div(taylor_eval(n->a, tvar), taylor_eval(n->b, tvar), n);
        case NodeKind::Pow: return t_pow(taylor_eval(n->a, tvar), taylor_eval(n->b, tvar), n);
        case NodeKind::Call: {
            Taylor u = taylor_eval(n->a, tvar);
            switch (n->func) {
                case FuncId::Sin: { Taylor s, c; t_sincos(u, s, c); return s; }
                case FuncId::Cos: { Taylor s, c; t_sincos(u, s, c); return c; }
                case FuncId::Tan: { Taylor s, c; t_sincos(u, s, c); return t_div(s, c, n); }
                case FuncId::Exp: return t_exp(u);
                case FuncId::Log: return t_log(u, n);
                case FuncId::Sqrt: return t_sqrt(u, n);
                case FuncId::Abs: return t_abs(u, n);
                case FuncId::Atan: return t_atan(u);
                case FuncId::Tanh: return t_tanh(u);
            }
            eval_fail("unknown function", n);
        }
        default:
            eval_fail("expression is not a function of t alone", n);
    }
}

// Derivatives d^j/dt^j of a t-only expression at t, j = 0..orders-1.
inline std::vector<double> derivatives_at(const ScalarExpr& e, double t, int orders) {
    if (orders > kTaylorMax)
        throw ShapeError("derivative order too high for series evaluation");
    Taylor series = taylor_eval(e.root(), Taylor::variable(t, orders));
    std::vector<double> out(orders);
    double fact = 1.0;
    for (int j = 0; j < orders; ++j) {
        if (j > 0) fact *= j;
        out[j] = series.c[j] * fact;
    }
    return out;
}

} // namespace bvpcert::detail
