#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bvpcert {

// Syntax error in an expression, problem file, or CSV. `offset` is the
// 0-based byte offset into the source text.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string msg, std::size_t offset)
        : std::runtime_error(std::move(msg)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

// Evaluation failed at a finite input: log of a non-positive value, division
// by zero, non-integer power of a negative base, overflow to non-finite.
// `subexpr` is the pretty-printed offending subexpression.
class EvalError : public std::runtime_error {
public:
    EvalError(std::string msg, std::string subexpr)
        : std::runtime_error(std::move(msg)), subexpr_(std::move(subexpr)) {}
    const std::string& subexpr() const { return subexpr_; }

private:
    std::string subexpr_;
};

// A standing hypothesis of the method fails numerically: leading coefficient
// vanishes on the grid, Wronskian vanishes, or the boundary matrix is
// singular or near-singular. CLI maps this to exit code 3.
class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A certificate precondition does not hold (q >= 1 where q < 1 is needed,
// or a certified quantity contradicts itself). CLI maps this to exit code 2.
class CertificateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Problem-file schema violation (unknown key, missing section, bad type).
// CLI maps this to exit code 64.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape mismatch between data and problem (CSV columns vs order, grid size).
// CLI maps this to exit code 65.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace bvpcert
