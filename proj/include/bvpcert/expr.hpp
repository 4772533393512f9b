#pragma once

// Expression mini-language for problem files. Scalar expressions over {t, x}
// with a fixed function catalog define coefficients, nonlinearities and
// kernels; functional expressions built from point evaluations x^(j)(p) and
// integrals int(f) define the boundary functionals.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := unary ('^' factor)?
//   unary  := '-'? atom
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
// In functional context atoms additionally include the reserved forms
// x(p), x'(p), x''(p), x^(j)(p) and int(f), with literal p and j.

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bvpcert/errors.hpp"
#include "bvpcert/grid.hpp"

namespace bvpcert {

enum class FuncId { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Atan, Tanh };

inline constexpr std::array<const char*, 9> kFuncNames = {
    "sin", "cos", "tan", "exp", "log", "sqrt", "abs", "atan", "tanh"};

enum class NodeKind {
    Number, VarT, VarX, VarAccum,
    Neg, Add, Sub, Mul, Div, Pow, Call,
    PointEval, Integral,
};

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    NodeKind kind;
    double number = 0.0;      // Number
    FuncId func = FuncId::Sin; // Call
    int deriv_order = 0;      // PointEval
    double point = 0.0;       // PointEval
    NodePtr a, b;             // children
    std::size_t offset = 0;   // source byte offset
};

namespace detail {

inline NodePtr make_node(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

inline NodePtr make_number(double v) {
    ExprNode n;
    n.kind = NodeKind::Number;
    n.number = v;
    return make_node(std::move(n));
}

inline NodePtr make_accum() {
    ExprNode n;
    n.kind = NodeKind::VarAccum;
    return make_node(std::move(n));
}

struct Token {
    enum Kind { Num, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, Tick, End } kind;
    std::size_t offset = 0;
    double number = 0.0;
    std::string text;
};

inline std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t end = 0;
            double v;
            try {
                v = std::stod(src.substr(i), &end);
            } catch (const std::exception&) {
                throw ParseError("bad numeric literal", i);
            }
            out.push_back({Token::Num, i, v, src.substr(i, end)});
            i += end;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            out.push_back({Token::Ident, i, 0.0, src.substr(i, j - i)});
            i = j;
            continue;
        }
        Token::Kind k;
        switch (c) {
            case '+': k = Token::Plus; break;
            case '-': k = Token::Minus; break;
            case '*': k = Token::Star; break;
            case '/': k = Token::Slash; break;
            case '^': k = Token::Caret; break;
            case '(': k = Token::LParen; break;
            case ')': k = Token::RParen; break;
            case ',': k = Token::Comma; break;
            case '\'': k = Token::Tick; break;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", i);
        }
        out.push_back({k, i, 0.0, std::string(1, c)});
        ++i;
    }
    out.push_back({Token::End, src.size(), 0.0, ""});
    return out;
}

inline std::optional<FuncId> lookup_func(const std::string& name) {
    for (std::size_t k = 0; k < kFuncNames.size(); ++k)
        if (name == kFuncNames[k]) return static_cast<FuncId>(k);
    return std::nullopt;
}

class Parser {
public:
    Parser(const std::string& src, bool functional)
        : src_(src), toks_(lex(src)), functional_(functional) {}

    NodePtr parse() {
        NodePtr e = expr();
        if (peek().kind != Token::End)
            throw ParseError("unexpected '" + peek().text + "', expected operator or end of input",
                             peek().offset);
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    Token next() { return toks_[pos_++]; }
    bool accept(Token::Kind k) {
        if (peek().kind == k) { ++pos_; return true; }
        return false;
    }
    void expect(Token::Kind k, const char* what) {
        if (!accept(k)) {
            if (peek().kind == Token::End && !parens_.empty())
                throw ParseError("unbalanced parenthesis", parens_.back());
            throw ParseError(std::string("expected ") + what + ", got '" +
                                 (peek().kind == Token::End ? "end of input" : peek().text) + "'",
                             peek().offset);
        }
    }

    NodePtr expr() {
        NodePtr lhs = term();
        while (peek().kind == Token::Plus || peek().kind == Token::Minus) {
            Token op = next();
            NodePtr rhs = term();
            lhs = make_node({op.kind == Token::Plus ? NodeKind::Add : NodeKind::Sub,
                             0.0, FuncId::Sin, 0, 0.0, lhs, rhs, op.offset});
        }
        return lhs;
    }

    NodePtr term() {
        NodePtr lhs = factor();
        while (peek().kind == Token::Star || peek().kind == Token::Slash) {
            Token op = next();
            NodePtr rhs = factor();
            lhs = make_node({op.kind == Token::Star ? NodeKind::Mul : NodeKind::Div,
                             0.0, FuncId::Sin, 0, 0.0, lhs, rhs, op.offset});
        }
        return lhs;
    }

    // '^' is right-associative and binds looser than unary minus, so
    // -x^2 parses as (-x)^2 per the grammar above.
    NodePtr factor() {
        NodePtr base = unary();
        if (peek().kind == Token::Caret) {
            Token op = next();
            NodePtr e = factor();
            return make_node({NodeKind::Pow, 0.0, FuncId::Sin, 0, 0.0, base, e, op.offset});
        }
        return base;
    }

    NodePtr unary() {
        if (peek().kind == Token::Minus) {
            Token op = next();
            NodePtr inner = atom();
            return make_node({NodeKind::Neg, 0.0, FuncId::Sin, 0, 0.0, inner, nullptr, op.offset});
        }
        return atom();
    }

    NodePtr atom() {
        const Token& tk = peek();
        switch (tk.kind) {
            case Token::Num: {
                Token t = next();
                return make_node({NodeKind::Number, t.number, FuncId::Sin, 0, 0.0,
                                  nullptr, nullptr, t.offset});
            }
            case Token::LParen: {
                Token t = next();
                parens_.push_back(t.offset);
                NodePtr e = expr();
                expect(Token::RParen, "')'");
                parens_.pop_back();
                return e;
            }
            case Token::Ident:
                return ident_atom();
            case Token::End:
                if (!parens_.empty()) throw ParseError("unbalanced parenthesis", parens_.back());
                throw ParseError("expected expression, got end of input", tk.offset);
            default:
                throw ParseError("unexpected '" + tk.text + "', expected expression", tk.offset);
        }
    }

    NodePtr ident_atom() {
        Token id = next();
        if (functional_ && id.text == "x" &&
            (peek().kind == Token::Tick || peek().kind == Token::Caret ||
             peek().kind == Token::LParen))
            return point_eval(id);
        if (functional_ && id.text == "int" && peek().kind == Token::LParen) {
            next(); // '('
            parens_.push_back(id.offset);
            bool saved = functional_;
            functional_ = false; // integrand is a scalar expression in t and x
            NodePtr body = expr();
            functional_ = saved;
            expect(Token::RParen, "')'");
            parens_.pop_back();
            return make_node({NodeKind::Integral, 0.0, FuncId::Sin, 0, 0.0,
                              body, nullptr, id.offset});
        }
        if (peek().kind == Token::LParen) {
            Token lp = next();
            parens_.push_back(lp.offset);
            NodePtr arg = expr();
            expect(Token::RParen, "')'");
            parens_.pop_back();
            std::optional<FuncId> f = lookup_func(id.text);
            if (!f) {
                if (id.text == "x" || id.text == "t")
                    throw ParseError("'" + id.text + "' is not a function", id.offset);
                throw ParseError("unknown function '" + id.text + "'", id.offset);
            }
            return make_node({NodeKind::Call, 0.0, *f, 0, 0.0, arg, nullptr, id.offset});
        }
        if (id.text == "t")
            return make_node({NodeKind::VarT, 0.0, FuncId::Sin, 0, 0.0, nullptr, nullptr, id.offset});
        if (id.text == "x") {
            if (functional_)
                throw ParseError("bare 'x' is not allowed in a functional; use x(p) or int(...)",
                                 id.offset);
            return make_node({NodeKind::VarX, 0.0, FuncId::Sin, 0, 0.0, nullptr, nullptr, id.offset});
        }
        if (id.text == "pi")
            return make_node({NodeKind::Number, M_PI, FuncId::Sin, 0, 0.0, nullptr, nullptr, id.offset});
        if (id.text == "e")
            return make_node({NodeKind::Number, M_E, FuncId::Sin, 0, 0.0, nullptr, nullptr, id.offset});
        throw ParseError("unknown identifier '" + id.text + "'", id.offset);
    }

    // x(p), x'(p), x''(p), x^(j)(p) with literal j and p.
    NodePtr point_eval(const Token& id) {
        int order = 0;
        if (peek().kind == Token::Tick) {
            while (accept(Token::Tick)) ++order;
        } else if (peek().kind == Token::Caret) {
            next();
            expect(Token::LParen, "'(' after x^");
            if (peek().kind != Token::Num)
                throw ParseError("derivative order must be a literal integer", peek().offset);
            Token num = next();
            double v = num.number;
            if (v != std::floor(v) || v < 0 || v > 64)
                throw ParseError("derivative order must be a small nonnegative integer", num.offset);
            order = static_cast<int>(v);
            expect(Token::RParen, "')'");
        }
        expect(Token::LParen, "'(' after point-evaluation form");
        bool negate = accept(Token::Minus);
        if (peek().kind != Token::Num)
            throw ParseError("point evaluation requires a literal point", peek().offset);
        Token num = next();
        double p = negate ? -num.number : num.number;
        expect(Token::RParen, "')'");
        if (p < 0.0 || p > 1.0)
            throw ParseError("evaluation point must lie in [0,1]", num.offset);
        return make_node({NodeKind::PointEval, 0.0, FuncId::Sin, order, p,
                          nullptr, nullptr, id.offset});
    }

    std::string src_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    bool functional_;
    std::vector<std::size_t> parens_;
};

inline int precedence(NodeKind k) {
    switch (k) {
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Pow: return 3;
        case NodeKind::Neg: return 4;
        default: return 5;
    }
}

inline void print_node(std::string& out, const NodePtr& n, int minprec);

inline void print_child(std::string& out, const NodePtr& n, int minprec) {
    if (precedence(n->kind) < minprec) {
        out += '(';
        print_node(out, n, 0);
        out += ')';
    } else {
        print_node(out, n, 0);
    }
}

inline void print_node(std::string& out, const NodePtr& n, int) {
    switch (n->kind) {
        case NodeKind::Number: out += format_double(n->number); break;
        case NodeKind::VarT: out += 't'; break;
        case NodeKind::VarX: out += 'x'; break;
        case NodeKind::VarAccum: out += '@'; break;
        case NodeKind::Neg:
            out += '-';
            print_child(out, n->a, 5);
            break;
        case NodeKind::Add:
        case NodeKind::Sub:
            print_child(out, n->a, 1);
            out += n->kind == NodeKind::Add ? " + " : " - ";
            print_child(out, n->b, 2);
            break;
        case NodeKind::Mul:
        case NodeKind::Div:
            print_child(out, n->a, 2);
            out += n->kind == NodeKind::Mul ? " * " : " / ";
            print_child(out, n->b, 3);
            break;
        case NodeKind::Pow:
            print_child(out, n->a, 4);
            out += '^';
            print_child(out, n->b, 3);
            break;
        case NodeKind::Call:
            out += kFuncNames[static_cast<std::size_t>(n->func)];
            out += '(';
            print_node(out, n->a, 0);
            out += ')';
            break;
        case NodeKind::PointEval:
            out += 'x';
            if (n->deriv_order == 1) out += '\'';
            else if (n->deriv_order == 2) out += "''";
            else if (n->deriv_order >= 3) out += "^(" + std::to_string(n->deriv_order) + ")";
            out += '(' + format_double(n->point) + ')';
            break;
        case NodeKind::Integral:
            out += "int(";
            print_node(out, n->a, 0);
            out += ')';
            break;
    }
}

inline std::string print_tree(const NodePtr& n) {
    std::string out;
    print_node(out, n, 0);
    return out;
}

[[noreturn]] inline void eval_fail(const char* what, const NodePtr& n) {
    throw EvalError(std::string(what) + " in '" + print_tree(n) + "'", print_tree(n));
}

struct EvalEnv {
    double t = 0.0;
    double x = 0.0;
    double accum = 0.0;
};

inline double eval_node(const NodePtr& n, const EvalEnv& env) {
    double r;
    switch (n->kind) {
        case NodeKind::Number: r = n->number; break;
        case NodeKind::VarT: r = env.t; break;
        case NodeKind::VarX: r = env.x; break;
        case NodeKind::VarAccum: r = env.accum; break;
        case NodeKind::Neg: r = -eval_node(n->a, env); break;
        case NodeKind::Add: r = eval_node(n->a, env) + eval_node(n->b, env); break;
        case NodeKind::Sub: r = eval_node(n->a, env) - eval_node(n->b, env); break;
        case NodeKind::Mul: r = eval_node(n->a, env) * eval_node(n->b, env); break;
        case NodeKind::Div: {
            double num = eval_node(n->a, env), den = eval_node(n->b, env);
            if (den == 0.0) eval_fail("division by zero", n);
            r = num / den;
            break;
        }
        case NodeKind::Pow: {
            double base = eval_node(n->a, env), ex = eval_node(n->b, env);
            if (base < 0.0 && ex != std::floor(ex))
                eval_fail("non-integer power of a negative base", n);
            if (base == 0.0 && ex < 0.0) eval_fail("zero raised to a negative power", n);
            r = std::pow(base, ex);
            break;
        }
        case NodeKind::Call: {
            double a = eval_node(n->a, env);
            switch (n->func) {
                case FuncId::Sin: r = std::sin(a); break;
                case FuncId::Cos: r = std::cos(a); break;
                case FuncId::Tan: r = std::tan(a); break;
                case FuncId::Exp: r = std::exp(a); break;
                case FuncId::Log:
                    if (a <= 0.0) eval_fail("log of a non-positive value", n);
                    r = std::log(a);
                    break;
                case FuncId::Sqrt:
                    if (a < 0.0) eval_fail("sqrt of a negative value", n);
                    r = std::sqrt(a);
                    break;
                case FuncId::Abs: r = std::fabs(a); break;
                case FuncId::Atan: r = std::atan(a); break;
                case FuncId::Tanh: r = std::tanh(a); break;
                default: eval_fail("unknown function", n);
            }
            break;
        }
        default:
            eval_fail("functional form evaluated in scalar context", n);
    }
    if (!std::isfinite(r)) eval_fail("non-finite result", n);
    return r;
}

inline void collect_vars(const NodePtr& n, std::set<char>& vars) {
    if (!n) return;
    if (n->kind == NodeKind::VarT) vars.insert('t');
    if (n->kind == NodeKind::VarX) vars.insert('x');
    collect_vars(n->a, vars);
    collect_vars(n->b, vars);
}

} // namespace detail

// Immutable scalar expression over {t, x}.
class ScalarExpr {
public:
    ScalarExpr() : root_(detail::make_number(0.0)) {}
    explicit ScalarExpr(NodePtr root) : root_(std::move(root)) {}

    static ScalarExpr constant(double v) {
        return ScalarExpr(detail::make_number(v));
    }

    double eval(double t, double x) const { return detail::eval_node(root_, {t, x, 0.0}); }
    std::string print() const { return detail::print_tree(root_); }

    bool uses_t() const { return used_vars().count('t') > 0; }
    bool uses_x() const { return used_vars().count('x') > 0; }
    bool is_zero_literal() const {
        return root_->kind == NodeKind::Number && root_->number == 0.0;
    }

    const NodePtr& root() const { return root_; }

private:
    std::set<char> used_vars() const {
        std::set<char> vars;
        detail::collect_vars(root_, vars);
        return vars;
    }

    NodePtr root_;
};

inline ScalarExpr parse_scalar(const std::string& src) {
    return ScalarExpr(detail::Parser(src, false).parse());
}

// One term of a boundary functional: a scaled point evaluation x^(j)(p) or a
// scaled integral of a scalar expression of (t, x(t)) over [0,1].
struct FunctionalTerm {
    enum Kind { Point, Integral } kind;
    double coefficient = 1.0;
    int deriv_order = 0;  // Point
    double point = 0.0;   // Point
    NodePtr integrand;    // Integral
};

// eta_i / phi_i: a linear combination of point and integral terms, optionally
// wrapped in a scalar post-map applied to the accumulated value.
class FunctionalExpr {
public:
    FunctionalExpr() = default;
    FunctionalExpr(std::vector<FunctionalTerm> terms, NodePtr postmap, std::string source)
        : terms_(std::move(terms)), postmap_(std::move(postmap)), source_(std::move(source)) {}

    double eval(const Trajectory& x) const {
        double acc = 0.0;
        for (const FunctionalTerm& term : terms_) {
            if (term.kind == FunctionalTerm::Point) {
                acc += term.coefficient * x.eval(term.point, term.deriv_order);
            } else {
                std::vector<double> f(x.nodes());
                for (int i = 0; i < x.nodes(); ++i) {
                    double t = x.grid().node(i);
                    f[i] = detail::eval_node(term.integrand, {t, x.value(i, 0), 0.0});
                }
                acc += term.coefficient * quad(f, x.grid());
            }
        }
        if (postmap_) acc = detail::eval_node(postmap_, {0.0, 0.0, acc});
        return acc;
    }

    const std::vector<FunctionalTerm>& terms() const { return terms_; }
    bool has_postmap() const { return postmap_ != nullptr; }
    int max_deriv_order() const {
        int r = 0;
        for (const FunctionalTerm& t : terms_)
            if (t.kind == FunctionalTerm::Point) r = std::max(r, t.deriv_order);
        return r;
    }
    bool is_zero() const { return terms_.empty() && !postmap_; }
    const std::string& source() const { return source_; }

private:
    std::vector<FunctionalTerm> terms_;
    NodePtr postmap_; // evaluated with VarAccum bound to the accumulated value
    std::string source_;
};

namespace detail {

inline bool subtree_has_atom(const NodePtr& n) {
    if (!n) return false;
    if (n->kind == NodeKind::PointEval || n->kind == NodeKind::Integral) return true;
    return subtree_has_atom(n->a) || subtree_has_atom(n->b);
}

inline bool is_const_subtree(const NodePtr& n) {
    if (!n) return true;
    if (n->kind == NodeKind::VarT || n->kind == NodeKind::VarX ||
        n->kind == NodeKind::VarAccum || n->kind == NodeKind::PointEval ||
        n->kind == NodeKind::Integral)
        return false;
    return is_const_subtree(n->a) && is_const_subtree(n->b);
}

inline double fold_const(const NodePtr& n) { return eval_node(n, {0.0, 0.0, 0.0}); }

// Lowest node whose subtree contains every functional atom.
inline NodePtr atom_dominator(const NodePtr& n) {
    if (n->kind == NodeKind::PointEval || n->kind == NodeKind::Integral) return n;
    bool in_a = subtree_has_atom(n->a), in_b = subtree_has_atom(n->b);
    if (in_a && !in_b) return atom_dominator(n->a);
    if (in_b && !in_a) return atom_dominator(n->b);
    return n;
}

inline void decompose_linear(const NodePtr& n, double scale, std::vector<FunctionalTerm>& out) {
    switch (n->kind) {
        case NodeKind::PointEval:
            out.push_back({FunctionalTerm::Point, scale, n->deriv_order, n->point, nullptr});
            return;
        case NodeKind::Integral:
            out.push_back({FunctionalTerm::Integral, scale, 0, 0.0, n->a});
            return;
        case NodeKind::Neg:
            decompose_linear(n->a, -scale, out);
            return;
        case NodeKind::Add:
            decompose_linear(n->a, scale, out);
            decompose_linear(n->b, scale, out);
            return;
        case NodeKind::Sub:
            decompose_linear(n->a, scale, out);
            decompose_linear(n->b, -scale, out);
            return;
        case NodeKind::Mul:
            if (is_const_subtree(n->a)) { decompose_linear(n->b, scale * fold_const(n->a), out); return; }
            if (is_const_subtree(n->b)) { decompose_linear(n->a, scale * fold_const(n->b), out); return; }
            break;
        case NodeKind::Div:
            if (is_const_subtree(n->b)) {
                double d = fold_const(n->b);
                if (d == 0.0) throw ParseError("division by zero in functional coefficient", n->offset);
                decompose_linear(n->a, scale / d, out);
                return;
            }
            break;
        default:
            break;
    }
    throw ParseError("functional must be a linear combination of x^(j)(p) and int(...) terms, "
                     "optionally inside a scalar post-map",
                     n->offset);
}

// Rebuild the tree with the dominator subtree replaced by the accumulator
// variable; the result is the post-map.
inline NodePtr substitute_accum(const NodePtr& n, const NodePtr& target) {
    if (n == target) return make_accum();
    if (!n->a && !n->b) return n;
    ExprNode copy = *n;
    if (n->a) copy.a = substitute_accum(n->a, target);
    if (n->b) copy.b = substitute_accum(n->b, target);
    return make_node(std::move(copy));
}

} // namespace detail

inline FunctionalExpr parse_functional(const std::string& src) {
    NodePtr root = detail::Parser(src, true).parse();
    if (!detail::subtree_has_atom(root)) {
        if (!detail::is_const_subtree(root))
            throw ParseError("functional without point or integral terms must be constant", 0);
        double v = detail::fold_const(root);
        if (v == 0.0) return FunctionalExpr({}, nullptr, src);
        return FunctionalExpr({}, detail::make_number(v), src);
    }
    // A tree that is already a linear combination needs no post-map.
    try {
        std::vector<FunctionalTerm> terms;
        detail::decompose_linear(root, 1.0, terms);
        return FunctionalExpr(std::move(terms), nullptr, src);
    } catch (const ParseError&) {
    }
    NodePtr dom = detail::atom_dominator(root);
    std::vector<FunctionalTerm> terms;
    detail::decompose_linear(dom, 1.0, terms);
    NodePtr postmap = detail::substitute_accum(root, dom);
    std::set<char> vars;
    detail::collect_vars(postmap, vars);
    if (!vars.empty())
        throw ParseError("post-map around functional terms cannot reference t or x", root->offset);
    return FunctionalExpr(std::move(terms), std::move(postmap), src);
}

} // namespace bvpcert
