#pragma once

// Coefficient expressions for plugin operators and LTP models.
//
// Grammar (EBNF, whitespace ignored):
//
//   expr    = term , { ("+" | "-") , term } ;
//   term    = unary , { ("*" | "/") , unary } ;
//   unary   = ("-" | "+") , unary | power ;
//   power   = primary , [ "^" , unary ] ;             (* right associative *)
//   primary = number | "i" | "pi" | identifier
//           | func , "(" , expr , ")" | "(" , expr , ")" ;
//   func    = "sqrt" | "sin" | "cos" | "exp" | "log" | "gamma" ;
//   number  = digit , { digit } , [ "." , { digit } ] , [ ("e" | "E") , [ "+" | "-" ] , digit , { digit } ] ;
//
// Identifiers other than i and pi are variables bound at evaluation time
// (n = row index, d = distance from the diagonal, m = strip index, ...).
//
// Expressions evaluate either to Complex<R> (floating point) or to CIBox<R>
// (rigorous enclosure).  In enclosure mode the elementary functions accept
// only real arguments; anything else is reported as not enclosable.

#include "specgate/interval.hpp"
#include "specgate/numeric.hpp"

#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace specgate {

class ExprError : public Error {
public:
    using Error::Error;
};

/// Variable bindings; values are exact for integers up to 2^53.
using Bindings = std::vector<std::pair<std::string, double>>;

class Expr {
public:
    Expr() = default;

    static Expr parse(std::string_view text)
    {
        Parser p{text, 0};
        Expr e;
        e.source_ = std::string(text);
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size()) {
            throw ExprError("unexpected '" + std::string(1, text[p.pos]) + "' at offset " + std::to_string(p.pos) +
                            " in expression '" + std::string(text) + "'");
        }
        return e;
    }

    bool empty() const { return root_ == nullptr; }
    const std::string& source() const { return source_; }

    std::vector<std::string> variables() const
    {
        std::vector<std::string> out;
        if (root_) {
            root_->collect_vars(out);
        }
        return out;
    }

    template <class R>
    Complex<R> eval(const Bindings& vars) const
    {
        require();
        return root_->eval_float<R>(vars);
    }

    template <class R>
    CIBox<R> enclose(const Bindings& vars) const
    {
        require();
        return root_->eval_box<R>(vars);
    }

private:
    enum class Kind { Number, Imag, Pi, Var, Neg, Add, Sub, Mul, Div, Pow, Func };

    struct Node {
        Kind kind;
        std::string text; // literal, variable, or function name
        std::unique_ptr<Node> a;
        std::unique_ptr<Node> b;

        void collect_vars(std::vector<std::string>& out) const
        {
            if (kind == Kind::Var) {
                for (const auto& v : out) {
                    if (v == text) {
                        return;
                    }
                }
                out.push_back(text);
            }
            if (a) {
                a->collect_vars(out);
            }
            if (b) {
                b->collect_vars(out);
            }
        }

        static double lookup(const Bindings& vars, const std::string& name)
        {
            for (const auto& [k, v] : vars) {
                if (k == name) {
                    return v;
                }
            }
            throw ExprError("unbound variable '" + name + "'");
        }

        template <class R>
        Complex<R> eval_float(const Bindings& vars) const
        {
            switch (kind) {
            case Kind::Number:
                return Complex<R>(real_traits<R>::from_string(text));
            case Kind::Imag:
                return {R(0), R(1)};
            case Kind::Pi:
                return Complex<R>(real_traits<R>::pi());
            case Kind::Var:
                return Complex<R>(R(lookup(vars, text)));
            case Kind::Neg:
                return -a->eval_float<R>(vars);
            case Kind::Add:
                return a->eval_float<R>(vars) + b->eval_float<R>(vars);
            case Kind::Sub:
                return a->eval_float<R>(vars) - b->eval_float<R>(vars);
            case Kind::Mul:
                return a->eval_float<R>(vars) * b->eval_float<R>(vars);
            case Kind::Div:
                return a->eval_float<R>(vars) / b->eval_float<R>(vars);
            case Kind::Pow:
                return cpow(a->eval_float<R>(vars), b->eval_float<R>(vars));
            case Kind::Func:
                return cfunc(text, a->eval_float<R>(vars));
            }
            throw ExprError("corrupt expression");
        }

        template <class R>
        CIBox<R> eval_box(const Bindings& vars) const
        {
            switch (kind) {
            case Kind::Number:
                return CIBox<R>(Interval<R>::decimal(text));
            case Kind::Imag:
                return CIBox<R>(Interval<R>(0), Interval<R>(1));
            case Kind::Pi:
                return CIBox<R>(Interval<R>::pi());
            case Kind::Var:
                return CIBox<R>(Interval<R>(R(lookup(vars, text))));
            case Kind::Neg:
                return -a->eval_box<R>(vars);
            case Kind::Add:
                return a->eval_box<R>(vars) + b->eval_box<R>(vars);
            case Kind::Sub:
                return a->eval_box<R>(vars) - b->eval_box<R>(vars);
            case Kind::Mul:
                return a->eval_box<R>(vars) * b->eval_box<R>(vars);
            case Kind::Div:
                return a->eval_box<R>(vars) / b->eval_box<R>(vars);
            case Kind::Pow:
                return box_pow(a->eval_box<R>(vars), b->eval_box<R>(vars));
            case Kind::Func:
                return box_func(text, a->eval_box<R>(vars));
            }
            throw ExprError("corrupt expression");
        }

        template <class R>
        static bool integral(const Complex<R>& z, int& out)
        {
            if (!(z.im == R(0))) {
                return false;
            }
            const double d = to_double(z.re);
            if (std::floor(d) != d || std::fabs(d) > 1024 || !(R(d) == z.re)) {
                return false;
            }
            out = static_cast<int>(d);
            return true;
        }

        template <class R>
        static Complex<R> cpow(const Complex<R>& x, const Complex<R>& y)
        {
            int e = 0;
            if (integral(y, e)) {
                Complex<R> r(R(1));
                Complex<R> base = e < 0 ? Complex<R>(R(1)) / x : x;
                for (int k = std::abs(e); k > 0; k >>= 1) {
                    if (k & 1) {
                        r = r * base;
                    }
                    base = base * base;
                }
                return r;
            }
            if (x.im == R(0) && y.im == R(0) && x.re > R(0)) {
                return Complex<R>(pow(x.re, y.re));
            }
            return cfunc("exp", y * cfunc("log", x));
        }

        template <class R>
        static Complex<R> cfunc(const std::string& f, const Complex<R>& z)
        {
            const bool real = z.im == R(0);
            if (f == "sqrt") {
                if (real && z.re >= R(0)) {
                    return Complex<R>(sqrt(z.re));
                }
                const R r = abs(z);
                R re = sqrt((r + z.re) / R(2));
                R im = sqrt((r - z.re) / R(2));
                if (z.im < R(0)) {
                    im = -im;
                }
                return {re, im};
            }
            if (f == "exp") {
                const R m = exp(z.re);
                return real ? Complex<R>(m) : Complex<R>(m * cos(z.im), m * sin(z.im));
            }
            if (f == "log") {
                if (real && z.re > R(0)) {
                    return Complex<R>(log(z.re));
                }
                return {log(abs(z)), atan2(z.im, z.re)};
            }
            if (f == "sin") {
                if (real) {
                    return Complex<R>(sin(z.re));
                }
                const R ep = exp(z.im);
                const R em = R(1) / ep;
                return {sin(z.re) * (ep + em) / R(2), cos(z.re) * (ep - em) / R(2)};
            }
            if (f == "cos") {
                if (real) {
                    return Complex<R>(cos(z.re));
                }
                const R ep = exp(z.im);
                const R em = R(1) / ep;
                return {cos(z.re) * (ep + em) / R(2), -sin(z.re) * (ep - em) / R(2)};
            }
            if (f == "gamma") {
                if (!real) {
                    throw ExprError("gamma needs a real argument");
                }
                return Complex<R>(tgamma(z.re));
            }
            throw ExprError("unknown function '" + f + "'");
        }

        template <class R>
        static const Interval<R>& real_part(const CIBox<R>& z, const std::string& f)
        {
            if (!(z.im().lo() == R(0) && z.im().hi() == R(0))) {
                throw ExprError("not enclosable: " + f + " of a non-real argument");
            }
            return z.re();
        }

        template <class R>
        static CIBox<R> box_pow(const CIBox<R>& x, const CIBox<R>& y)
        {
            const Interval<R>& yr = real_part(y, "power");
            if (yr.is_point()) {
                const double d = to_double(yr.lo());
                if (std::floor(d) == d && std::fabs(d) <= 1024 && R(d) == yr.lo()) {
                    const int e = static_cast<int>(d);
                    CIBox<R> r(Interval<R>(1));
                    CIBox<R> base = e < 0 ? CIBox<R>(Interval<R>(1)) / x : x;
                    for (int k = std::abs(e); k > 0; k >>= 1) {
                        if (k & 1) {
                            r = r * base;
                        }
                        base = base * base;
                    }
                    return r;
                }
            }
            const Interval<R>& xr = real_part(x, "power");
            if (!(xr.lo() > R(0))) {
                throw ExprError("not enclosable: non-integer power of a non-positive base");
            }
            return CIBox<R>(pow(xr, yr));
        }

        template <class R>
        static CIBox<R> box_func(const std::string& f, const CIBox<R>& z)
        {
            const Interval<R>& x = real_part(z, f);
            try {
                if (f == "sqrt") {
                    return CIBox<R>(sqrt(x));
                }
                if (f == "exp") {
                    return CIBox<R>(exp(x));
                }
                if (f == "log") {
                    return CIBox<R>(log(x));
                }
                if (f == "sin") {
                    return CIBox<R>(sin(x));
                }
                if (f == "cos") {
                    return CIBox<R>(cos(x));
                }
                if (f == "gamma") {
                    return CIBox<R>(tgamma(x));
                }
            } catch (const IntervalError& e) {
                throw ExprError(std::string("not enclosable: ") + e.what());
            }
            throw ExprError("unknown function '" + f + "'");
        }
    };

    struct Parser {
        std::string_view s;
        std::size_t pos;

        void skip_ws()
        {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) {
                ++pos;
            }
        }

        bool accept(char c)
        {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        [[noreturn]] void fail(const std::string& what) const
        {
            throw ExprError(what + " at offset " + std::to_string(pos) + " in expression '" + std::string(s) + "'");
        }

        static std::unique_ptr<Node> make(Kind k, std::unique_ptr<Node> a = nullptr, std::unique_ptr<Node> b = nullptr,
                                          std::string text = {})
        {
            auto n = std::make_unique<Node>();
            n->kind = k;
            n->a = std::move(a);
            n->b = std::move(b);
            n->text = std::move(text);
            return n;
        }

        std::unique_ptr<Node> parse_expr()
        {
            auto lhs = parse_term();
            for (;;) {
                if (accept('+')) {
                    lhs = make(Kind::Add, std::move(lhs), parse_term());
                } else if (accept('-')) {
                    lhs = make(Kind::Sub, std::move(lhs), parse_term());
                } else {
                    return lhs;
                }
            }
        }

        std::unique_ptr<Node> parse_term()
        {
            auto lhs = parse_unary();
            for (;;) {
                if (accept('*')) {
                    lhs = make(Kind::Mul, std::move(lhs), parse_unary());
                } else if (accept('/')) {
                    lhs = make(Kind::Div, std::move(lhs), parse_unary());
                } else {
                    return lhs;
                }
            }
        }

        std::unique_ptr<Node> parse_unary()
        {
            if (accept('-')) {
                return make(Kind::Neg, parse_unary());
            }
            if (accept('+')) {
                return parse_unary();
            }
            return parse_power();
        }

        std::unique_ptr<Node> parse_power()
        {
            auto base = parse_primary();
            if (accept('^')) {
                return make(Kind::Pow, std::move(base), parse_unary());
            }
            return base;
        }

        std::unique_ptr<Node> parse_primary()
        {
            skip_ws();
            if (pos >= s.size()) {
                fail("unexpected end");
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                return parse_number();
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) {
                    ++pos;
                }
                std::string name(s.substr(start, pos - start));
                if (name == "sqrt" || name == "sin" || name == "cos" || name == "exp" || name == "log" ||
                    name == "gamma") {
                    if (!accept('(')) {
                        fail("expected '(' after " + name);
                    }
                    auto arg = parse_expr();
                    if (!accept(')')) {
                        fail("expected ')'");
                    }
                    return make(Kind::Func, std::move(arg), nullptr, name);
                }
                if (name == "i") {
                    return make(Kind::Imag);
                }
                if (name == "pi") {
                    return make(Kind::Pi);
                }
                return make(Kind::Var, nullptr, nullptr, name);
            }
            if (accept('(')) {
                auto e = parse_expr();
                if (!accept(')')) {
                    fail("expected ')'");
                }
                return e;
            }
            fail(std::string("unexpected '") + c + "'");
        }

        std::unique_ptr<Node> parse_number()
        {
            const std::size_t start = pos;
            auto digits = [&] {
                std::size_t n = 0;
                while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
                    ++pos;
                    ++n;
                }
                return n;
            };
            std::size_t nd = digits();
            if (pos < s.size() && s[pos] == '.') {
                ++pos;
                nd += digits();
            }
            if (nd == 0) {
                fail("malformed number");
            }
            if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
                ++pos;
                if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
                    ++pos;
                }
                if (digits() == 0) {
                    fail("malformed exponent");
                }
            }
            return make(Kind::Number, nullptr, nullptr, std::string(s.substr(start, pos - start)));
        }
    };

    void require() const
    {
        if (!root_) {
            throw ExprError("empty expression");
        }
    }

    std::string source_;
    std::shared_ptr<const Node> root_;
};

} // namespace specgate
