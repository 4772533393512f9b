#pragma once

// Problem files: a small sectioned key = value format with numbers, strings,
// booleans, arrays and inline tables. Sections are [operator], [boundary],
// [nonlinear] and [numerics]; unknown keys are rejected before any
// computation runs.

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bvpcert/errors.hpp"
#include "bvpcert/expr.hpp"
#include "bvpcert/measure.hpp"
#include "bvpcert/solver.hpp"

namespace bvpcert {

namespace detail {

struct FileValue {
    enum class Kind { Number, String, Boolean, Array, Table } kind = Kind::Number;
    double num = 0.0;
    std::string str;
    bool boolean = false;
    std::vector<FileValue> arr;
    std::vector<std::pair<std::string, FileValue>> tab;
    int line = 0;
};

class ValueParser {
public:
    ValueParser(const std::string& s, int line) : s_(s), line_(line) {}

    FileValue parse() {
        FileValue v = value();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters after value");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& msg) {
        throw SchemaError("line " + std::to_string(line_) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    char peek() { skip_ws(); return pos_ < s_.size() ? s_[pos_] : '\0'; }

    FileValue value() {
        FileValue v;
        v.line = line_;
        const char c = peek();
        if (c == '"') {
            ++pos_;
            std::size_t end = s_.find('"', pos_);
            if (end == std::string::npos) fail("unterminated string");
            v.kind = FileValue::Kind::String;
            v.str = s_.substr(pos_, end - pos_);
            pos_ = end + 1;
            return v;
        }
        if (c == '[') {
            ++pos_;
            v.kind = FileValue::Kind::Array;
            if (peek() == ']') { ++pos_; return v; }
            while (true) {
                v.arr.push_back(value());
                const char d = peek();
                if (d == ',') { ++pos_; continue; }
                if (d == ']') { ++pos_; break; }
                fail("expected ',' or ']' in array");
            }
            return v;
        }
        if (c == '{') {
            ++pos_;
            v.kind = FileValue::Kind::Table;
            if (peek() == '}') { ++pos_; return v; }
            while (true) {
                skip_ws();
                std::size_t start = pos_;
                while (pos_ < s_.size() &&
                       (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                    ++pos_;
                if (start == pos_) fail("expected key in table");
                std::string key = s_.substr(start, pos_ - start);
                if (peek() != '=') fail("expected '=' after table key '" + key + "'");
                ++pos_;
                v.tab.emplace_back(key, value());
                const char d = peek();
                if (d == ',') { ++pos_; continue; }
                if (d == '}') { ++pos_; break; }
                fail("expected ',' or '}' in table");
            }
            return v;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string word = s_.substr(start, pos_ - start);
            if (word == "true" || word == "false") {
                v.kind = FileValue::Kind::Boolean;
                v.boolean = word == "true";
                return v;
            }
            fail("unexpected word '" + word + "' (strings need quotes)");
        }
        std::size_t end = 0;
        try {
            v.num = std::stod(s_.substr(pos_), &end);
        } catch (const std::exception&) {
            fail("expected a value");
        }
        v.kind = FileValue::Kind::Number;
        pos_ += end;
        return v;
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    int line_;
};

using Section = std::map<std::string, FileValue>;

inline std::map<std::string, Section> parse_sections(const std::string& text) {
    std::map<std::string, Section> out;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // strip comments outside quotes
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) { line.erase(i); break; }
        }
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        if (line.front() == '[') {
            if (line.back() != ']')
                throw SchemaError("line " + std::to_string(lineno) + ": bad section header");
            section = line.substr(1, line.size() - 2);
            if (section != "operator" && section != "boundary" && section != "nonlinear" &&
                section != "numerics")
                throw SchemaError("line " + std::to_string(lineno) + ": unknown section [" +
                                  section + "]");
            out[section];
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw SchemaError("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw SchemaError("line " + std::to_string(lineno) + ": key outside any section");
        std::string key = line.substr(0, eq);
        key.erase(key.find_last_not_of(" \t") + 1);
        if (out[section].count(key))
            throw SchemaError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        out[section][key] = ValueParser(line.substr(eq + 1), lineno).parse();
    }
    return out;
}

class SectionReader {
public:
    SectionReader(const std::string& name, const Section* sec) : name_(name) {
        if (sec) sec_ = *sec;
    }

    bool has(const std::string& key) const { return sec_.count(key) > 0; }

    const FileValue& get(const std::string& key) {
        auto it = sec_.find(key);
        if (it == sec_.end())
            throw SchemaError("[" + name_ + "] is missing required key '" + key + "'");
        used_.insert(used_.end(), key);
        return it->second;
    }

    std::optional<FileValue> get_opt(const std::string& key) {
        auto it = sec_.find(key);
        if (it == sec_.end()) return std::nullopt;
        used_.insert(used_.end(), key);
        return it->second;
    }

    double number(const std::string& key, double fallback) {
        auto v = get_opt(key);
        if (!v) return fallback;
        if (v->kind != FileValue::Kind::Number)
            throw SchemaError("[" + name_ + "] key '" + key + "' must be a number");
        return v->num;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        auto v = get_opt(key);
        if (!v) return fallback;
        if (v->kind != FileValue::Kind::String)
            throw SchemaError("[" + name_ + "] key '" + key + "' must be a quoted string");
        return v->str;
    }

    bool flag(const std::string& key, bool fallback) {
        auto v = get_opt(key);
        if (!v) return fallback;
        if (v->kind != FileValue::Kind::Boolean)
            throw SchemaError("[" + name_ + "] key '" + key + "' must be true or false");
        return v->boolean;
    }

    void finish() const {
        for (const auto& [key, value] : sec_) {
            bool known = false;
            for (const std::string& u : used_)
                if (u == key) known = true;
            if (!known)
                throw SchemaError("[" + name_ + "] has unknown key '" + key + "' (line " +
                                  std::to_string(value.line) + ")");
        }
    }

private:
    std::string name_;
    Section sec_;
    std::vector<std::string> used_;
};

inline double table_number(const FileValue& tab, const std::string& key, int line) {
    for (const auto& [k, v] : tab.tab)
        if (k == key) {
            if (v.kind != FileValue::Kind::Number)
                throw SchemaError("line " + std::to_string(line) + ": '" + key + "' must be a number");
            return v.num;
        }
    throw SchemaError("line " + std::to_string(line) + ": table is missing '" + key + "'");
}

inline BVMeasure measure_from_value(const FileValue& v) {
    if (v.kind != FileValue::Kind::Table)
        throw SchemaError("line " + std::to_string(v.line) + ": omega entry must be a table");
    std::vector<Jump> jumps;
    std::optional<ScalarExpr> density;
    for (const auto& [key, val] : v.tab) {
        if (key == "jumps") {
            if (val.kind != FileValue::Kind::Array)
                throw SchemaError("line " + std::to_string(v.line) + ": jumps must be an array");
            for (const FileValue& j : val.arr) {
                if (j.kind != FileValue::Kind::Table)
                    throw SchemaError("line " + std::to_string(v.line) + ": each jump is a table");
                jumps.push_back({table_number(j, "t", j.line), table_number(j, "beta", j.line)});
            }
        } else if (key == "density") {
            if (val.kind != FileValue::Kind::String)
                throw SchemaError("line " + std::to_string(v.line) + ": density must be an expression string");
            ScalarExpr d = parse_scalar(val.str);
            if (d.uses_x())
                throw SchemaError("line " + std::to_string(v.line) + ": density may depend on t only");
            density = std::move(d);
        } else {
            throw SchemaError("line " + std::to_string(v.line) + ": unknown omega field '" + key + "'");
        }
    }
    return BVMeasure(std::move(jumps), std::move(density));
}

inline std::vector<std::vector<double>> matrix_from_value(const FileValue& v, int n) {
    if (v.kind != FileValue::Kind::Array)
        throw SchemaError("line " + std::to_string(v.line) + ": matrix must be an array of rows");
    if (static_cast<int>(v.arr.size()) != n)
        throw SchemaError("line " + std::to_string(v.line) + ": matrix must have n rows");
    std::vector<std::vector<double>> m;
    for (const FileValue& row : v.arr) {
        if (row.kind != FileValue::Kind::Array || static_cast<int>(row.arr.size()) != n)
            throw SchemaError("line " + std::to_string(v.line) + ": matrix rows must have n numbers");
        std::vector<double> r;
        for (const FileValue& cell : row.arr) {
            if (cell.kind != FileValue::Kind::Number)
                throw SchemaError("line " + std::to_string(v.line) + ": matrix entries must be numbers");
            r.push_back(cell.num);
        }
        m.push_back(std::move(r));
    }
    return m;
}

} // namespace detail

inline ProblemSpec load_problem(const std::string& text) {
    auto sections = detail::parse_sections(text);
    auto find = [&sections](const char* name) -> const detail::Section* {
        auto it = sections.find(name);
        return it == sections.end() ? nullptr : &it->second;
    };

    detail::SectionReader op("operator", find("operator"));
    const detail::FileValue& nv = op.get("n");
    if (nv.kind != detail::FileValue::Kind::Number || nv.num != std::floor(nv.num) || nv.num < 1 ||
        nv.num > 6)
        throw SchemaError("[operator] n must be an integer between 1 and 6");
    const int n = static_cast<int>(nv.num);
    std::vector<ScalarExpr> coeff;
    for (int i = 0; i <= n; ++i) {
        std::string key = "a" + std::to_string(i);
        std::string src = (i == n) ? op.text(key, "") : op.text(key, "0");
        if (i == n && src.empty())
            throw SchemaError("[operator] is missing the leading coefficient a" + std::to_string(n));
        ScalarExpr e = parse_scalar(src);
        if (e.uses_x())
            throw SchemaError("[operator] coefficient a" + std::to_string(i) + " may depend on t only");
        coeff.push_back(std::move(e));
    }
    op.finish();

    detail::SectionReader bd("boundary", find("boundary"));
    std::vector<std::vector<BVMeasure>> omega(n, std::vector<BVMeasure>(n));
    if (bd.has("points")) {
        const detail::FileValue& pts = bd.get("points");
        if (pts.kind != detail::FileValue::Kind::Array)
            throw SchemaError("[boundary] points must be an array of numbers");
        std::vector<double> points;
        for (const auto& p : pts.arr) {
            if (p.kind != detail::FileValue::Kind::Number)
                throw SchemaError("[boundary] points must be numbers");
            points.push_back(p.num);
        }
        std::vector<std::vector<std::vector<double>>> mats;
        for (std::size_t qi = 1; qi <= points.size(); ++qi)
            mats.push_back(detail::matrix_from_value(bd.get("matrix_" + std::to_string(qi)), n));
        omega = from_multipoint(points, mats);
    }
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            std::string key = "omega_" + std::to_string(i) + "_" + std::to_string(j);
            if (auto v = bd.get_opt(key)) {
                if (!omega[i - 1][j - 1].is_zero())
                    throw SchemaError("[boundary] " + key + " conflicts with the multipoint shorthand");
                omega[i - 1][j - 1] = detail::measure_from_value(*v);
            }
        }
    bd.finish();

    detail::SectionReader nl("nonlinear", find("nonlinear"));
    ScalarExpr psi = parse_scalar(nl.text("psi", "0"));
    if (psi.uses_t()) throw SchemaError("[nonlinear] psi must be a function of x alone");
    std::vector<FunctionalExpr> eta, phi;
    for (int i = 1; i <= n; ++i) {
        eta.push_back(parse_functional(nl.text("eta_" + std::to_string(i), "0")));
        phi.push_back(parse_functional(nl.text("phi_" + std::to_string(i), "0")));
    }
    GOperator G;
    std::string gkind = nl.text("G", "zero");
    if (gkind == "zero") {
        G.kind = GOperator::Kind::Zero;
    } else if (gkind == "pointwise") {
        G.kind = GOperator::Kind::Pointwise;
        G.expr = parse_scalar(nl.text("g", ""));
    } else if (gkind == "integral") {
        G.kind = GOperator::Kind::IntegralKernel;
        G.expr = parse_scalar(nl.text("k", ""));
    } else {
        throw SchemaError("[nonlinear] G must be \"zero\", \"pointwise\" or \"integral\"");
    }
    double k1 = nl.number("k1", 0.0);
    double k2 = nl.number("k2", 0.0);
    std::optional<double> C;
    if (nl.has("C")) C = nl.number("C", 0.0);
    nl.finish();

    detail::SectionReader nm("numerics", find("numerics"));
    Numerics num;
    num.m = static_cast<int>(nm.number("m", num.m));
    num.tol = nm.number("tol", num.tol);
    num.max_inner = static_cast<int>(nm.number("max_inner", num.max_inner));
    num.max_outer = static_cast<int>(nm.number("max_outer", num.max_outer));
    num.seed = static_cast<std::uint64_t>(nm.number("seed", static_cast<double>(num.seed)));
    num.probes = static_cast<int>(nm.number("probes", num.probes));
    num.anderson = nm.flag("anderson", num.anderson);
    num.lipschitz_samples = static_cast<int>(nm.number("lipschitz_samples", num.lipschitz_samples));
    num.ball_samples = static_cast<int>(nm.number("ball_samples", num.ball_samples));
    num.ball_doublings = static_cast<int>(nm.number("ball_doublings", num.ball_doublings));
    nm.finish();
    if (num.m < 5) throw SchemaError("[numerics] m must be at least 5");
    if (num.tol <= 0.0) throw SchemaError("[numerics] tol must be positive");

    ProblemSpec spec{LinearOperator(n, std::move(coeff)), BoundaryOperator(n, std::move(omega)),
                     std::move(psi), std::move(eta), std::move(phi), std::move(G),
                     k1, k2, C, num, {}, {}};
    spec.validate();
    return spec;
}

inline ProblemSpec load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_problem(ss.str());
}

} // namespace bvpcert
