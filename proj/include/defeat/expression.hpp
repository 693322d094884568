#pragma once

// Small arithmetic expression language for boundary data and sources.
//
//   variables  x y t theta
//   operators  + - * / ^ (right associative), unary minus
//   functions  sin cos exp log atan2 sqrt abs
//   constants  pi
//
// theta is the polar angle about an origin carried by the evaluation
// context; t is the arc parameter along a boundary chain.

#include <array>
#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"

namespace defeat {

enum class Var { X, Y, T, Theta };

struct EvalContext {
    double x = 0.0, y = 0.0, t = 0.0;
    Vec2 theta_origin{0.0, 0.0};

    double theta() const { return std::atan2(y - theta_origin.y, x - theta_origin.x); }
};

class Expression {
public:
    enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Atan2, Sqrt, Abs };

    struct Node {
        Op op = Op::Num;
        double value = 0.0;
        Var var = Var::X;
        std::shared_ptr<const Node> a, b;
    };
    using Ptr = std::shared_ptr<const Node>;

    Expression() : root_(num(0.0)) {}
    explicit Expression(Ptr root) : root_(std::move(root)) {}
    static Expression constant(double v) { return Expression(num(v)); }

    static Expression parse(const std::string &text);

    double eval(const EvalContext &ctx) const
    {
        const double v = eval(*root_, ctx);
        if (!std::isfinite(v))
            throw ExpressionError("expression evaluated to a non-finite value at (" + std::to_string(ctx.x) +
                                  ", " + std::to_string(ctx.y) + ")");
        return v;
    }
    double operator()(double x, double y) const { return eval(EvalContext{x, y}); }

    Expression derivative(Var v) const { return Expression(diff(root_, v)); }

    bool depends_on(Var v) const { return depends(*root_, v); }
    bool is_constant() const { return root_->op == Op::Num; }
    double constant_value() const { return root_->value; }

    std::string str() const { return print(*root_); }

    static Ptr num(double v)
    {
        auto n = std::make_shared<Node>();
        n->value = v;
        return n;
    }
    static Ptr make(Op op, Ptr a, Ptr b = nullptr);

private:
    Ptr root_;

    static double eval(const Node &n, const EvalContext &c);
    static Ptr diff(const Ptr &n, Var v);
    static bool depends(const Node &n, Var v)
    {
        if (n.op == Op::Var)
            return n.var == v;
        return (n.a && depends(*n.a, v)) || (n.b && depends(*n.b, v));
    }
    static std::string print(const Node &n);
};

namespace detail {

class ExprParser {
public:
    explicit ExprParser(const std::string &s) : s_(s) {}

    Expression::Ptr parse()
    {
        auto e = expr();
        skip();
        if (pos_ != s_.size())
            fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    using Op = Expression::Op;
    const std::string &s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string &what) const
    {
        throw ExpressionError("in '" + s_ + "' at column " + std::to_string(pos_ + 1) + ": " + what);
    }
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }
    bool accept(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c)
    {
        if (!accept(c))
            fail(std::string("expected '") + c + "'");
    }

    Expression::Ptr expr()
    {
        auto lhs = term();
        while (true) {
            if (accept('+'))
                lhs = Expression::make(Op::Add, lhs, term());
            else if (accept('-'))
                lhs = Expression::make(Op::Sub, lhs, term());
            else
                return lhs;
        }
    }
    Expression::Ptr term()
    {
        auto lhs = unary();
        while (true) {
            if (accept('*'))
                lhs = Expression::make(Op::Mul, lhs, unary());
            else if (accept('/'))
                lhs = Expression::make(Op::Div, lhs, unary());
            else
                return lhs;
        }
    }
    Expression::Ptr unary()
    {
        if (accept('-'))
            return Expression::make(Op::Neg, unary());
        if (accept('+'))
            return unary();
        return power();
    }
    Expression::Ptr power()
    {
        auto base = primary();
        if (accept('^'))
            return Expression::make(Op::Pow, base, unary());
        return base;
    }
    Expression::Ptr primary()
    {
        skip();
        if (pos_ >= s_.size())
            fail("unexpected end of expression");
        const char c = s_[pos_];
        if (accept('(')) {
            auto e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char *begin = s_.c_str() + pos_;
            char *end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin)
                fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return Expression::num(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            if (id == "pi")
                return Expression::num(pi);
            auto variable = [](Var v) {
                auto n = std::make_shared<Expression::Node>();
                n->op = Op::Var;
                n->var = v;
                return Expression::Ptr(n);
            };
            if (id == "x")
                return variable(Var::X);
            if (id == "y")
                return variable(Var::Y);
            if (id == "t")
                return variable(Var::T);
            if (id == "theta")
                return variable(Var::Theta);
            static const std::pair<const char *, Op> unary_fns[] = {
                {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp},
                {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}};
            for (const auto &[name, op] : unary_fns)
                if (id == name) {
                    expect('(');
                    auto arg = expr();
                    expect(')');
                    return Expression::make(op, arg);
                }
            if (id == "atan2") {
                expect('(');
                auto a = expr();
                expect(',');
                auto b = expr();
                expect(')');
                return Expression::make(Op::Atan2, a, b);
            }
            pos_ = start;
            fail("unknown identifier '" + id + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

} // namespace detail

inline Expression Expression::parse(const std::string &text)
{
    detail::ExprParser p(text);
    return Expression(p.parse());
}

// Builds a node, folding constants and the obvious identities so that
// derivatives stay small.
inline Expression::Ptr Expression::make(Op op, Ptr a, Ptr b)
{
    auto is = [](const Ptr &p, double v) { return p && p->op == Op::Num && p->value == v; };
    const bool ca = a && a->op == Op::Num, cb = !b || b->op == Op::Num;
    if (ca && cb) {
        Node tmp{op, 0.0, Var::X, a, b};
        const double v = eval(tmp, EvalContext{});
        if (std::isfinite(v))
            return num(v);
    }
    switch (op) {
    case Op::Add:
        if (is(a, 0.0))
            return b;
        if (is(b, 0.0))
            return a;
        break;
    case Op::Sub:
        if (is(b, 0.0))
            return a;
        if (is(a, 0.0))
            return make(Op::Neg, b);
        break;
    case Op::Mul:
        if (is(a, 0.0) || is(b, 0.0))
            return num(0.0);
        if (is(a, 1.0))
            return b;
        if (is(b, 1.0))
            return a;
        break;
    case Op::Div:
        if (is(a, 0.0))
            return num(0.0);
        if (is(b, 1.0))
            return a;
        break;
    case Op::Pow:
        if (is(b, 1.0))
            return a;
        if (is(b, 0.0))
            return num(1.0);
        break;
    case Op::Neg:
        if (a->op == Op::Neg)
            return a->a;
        break;
    default:
        break;
    }
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline double Expression::eval(const Node &n, const EvalContext &c)
{
    switch (n.op) {
    case Op::Num: return n.value;
    case Op::Var:
        switch (n.var) {
        case Var::X: return c.x;
        case Var::Y: return c.y;
        case Var::T: return c.t;
        case Var::Theta: return c.theta();
        }
        return 0.0;
    case Op::Neg: return -eval(*n.a, c);
    case Op::Add: return eval(*n.a, c) + eval(*n.b, c);
    case Op::Sub: return eval(*n.a, c) - eval(*n.b, c);
    case Op::Mul: return eval(*n.a, c) * eval(*n.b, c);
    case Op::Div: return eval(*n.a, c) / eval(*n.b, c);
    case Op::Pow: {
        const double e = eval(*n.b, c);
        const double base = eval(*n.a, c);
        if (e == 2.0)
            return base * base;
        return std::pow(base, e);
    }
    case Op::Sin: return std::sin(eval(*n.a, c));
    case Op::Cos: return std::cos(eval(*n.a, c));
    case Op::Exp: return std::exp(eval(*n.a, c));
    case Op::Log: return std::log(eval(*n.a, c));
    case Op::Atan2: return std::atan2(eval(*n.a, c), eval(*n.b, c));
    case Op::Sqrt: return std::sqrt(eval(*n.a, c));
    case Op::Abs: return std::abs(eval(*n.a, c));
    }
    return 0.0;
}

inline Expression::Ptr Expression::diff(const Ptr &n, Var v)
{
    const Ptr &a = n->a, &b = n->b;
    switch (n->op) {
    case Op::Num: return num(0.0);
    case Op::Var: return num(n->var == v ? 1.0 : 0.0);
    case Op::Neg: return make(Op::Neg, diff(a, v));
    case Op::Add: return make(Op::Add, diff(a, v), diff(b, v));
    case Op::Sub: return make(Op::Sub, diff(a, v), diff(b, v));
    case Op::Mul: return make(Op::Add, make(Op::Mul, diff(a, v), b), make(Op::Mul, a, diff(b, v)));
    case Op::Div:
        return make(Op::Div, make(Op::Sub, make(Op::Mul, diff(a, v), b), make(Op::Mul, a, diff(b, v))),
                    make(Op::Mul, b, b));
    case Op::Pow: {
        const Ptr da = diff(a, v), db = diff(b, v);
        // d(a^b) = b a^(b-1) a' + a^b log(a) b'
        Ptr out = make(Op::Mul, make(Op::Mul, b, make(Op::Pow, a, make(Op::Sub, b, num(1.0)))), da);
        if (!(db->op == Op::Num && db->value == 0.0))
            out = make(Op::Add, out, make(Op::Mul, make(Op::Mul, n, make(Op::Log, a)), db));
        return out;
    }
    case Op::Sin: return make(Op::Mul, make(Op::Cos, a), diff(a, v));
    case Op::Cos: return make(Op::Neg, make(Op::Mul, make(Op::Sin, a), diff(a, v)));
    case Op::Exp: return make(Op::Mul, n, diff(a, v));
    case Op::Log: return make(Op::Div, diff(a, v), a);
    case Op::Sqrt: return make(Op::Div, diff(a, v), make(Op::Mul, num(2.0), n));
    case Op::Abs: return make(Op::Mul, make(Op::Div, a, n), diff(a, v));
    case Op::Atan2: {
        // atan2(a, b)' = (b a' - a b') / (a^2 + b^2)
        const Ptr num_ = make(Op::Sub, make(Op::Mul, b, diff(a, v)), make(Op::Mul, a, diff(b, v)));
        return make(Op::Div, num_, make(Op::Add, make(Op::Mul, a, a), make(Op::Mul, b, b)));
    }
    }
    return num(0.0);
}

inline std::string Expression::print(const Node &n)
{
    auto fn = [&](const char *name) { return std::string(name) + "(" + print(*n.a) + ")"; };
    switch (n.op) {
    case Op::Num: {
        std::string s = std::to_string(n.value);
        return n.value < 0 ? "(" + s + ")" : s;
    }
    case Op::Var:
        switch (n.var) {
        case Var::X: return "x";
        case Var::Y: return "y";
        case Var::T: return "t";
        case Var::Theta: return "theta";
        }
        return "?";
    case Op::Neg: return "(-" + print(*n.a) + ")";
    case Op::Add: return "(" + print(*n.a) + " + " + print(*n.b) + ")";
    case Op::Sub: return "(" + print(*n.a) + " - " + print(*n.b) + ")";
    case Op::Mul: return "(" + print(*n.a) + " * " + print(*n.b) + ")";
    case Op::Div: return "(" + print(*n.a) + " / " + print(*n.b) + ")";
    case Op::Pow: return "(" + print(*n.a) + " ^ " + print(*n.b) + ")";
    case Op::Sin: return fn("sin");
    case Op::Cos: return fn("cos");
    case Op::Exp: return fn("exp");
    case Op::Log: return fn("log");
    case Op::Sqrt: return fn("sqrt");
    case Op::Abs: return fn("abs");
    case Op::Atan2: return "atan2(" + print(*n.a) + ", " + print(*n.b) + ")";
    }
    return "?";
}

/// Scalar or 2-vector of expressions. Vector text is "[e1, e2]".
struct ExprField {
    std::vector<Expression> components;

    ExprField() : components{Expression::constant(0.0)} {}
    explicit ExprField(Expression e) : components{std::move(e)} {}
    ExprField(Expression a, Expression b) : components{std::move(a), std::move(b)} {}

    static ExprField scalar(double v) { return ExprField(Expression::constant(v)); }
    static ExprField vector(double a, double b) { return {Expression::constant(a), Expression::constant(b)}; }

    static ExprField parse(const std::string &text)
    {
        const auto first = text.find_first_not_of(" \t");
        if (first != std::string::npos && text[first] == '[') {
            const auto last = text.find_last_not_of(" \t");
            if (text[last] != ']')
                throw ExpressionError("vector expression '" + text + "' lacks a closing ']'");
            const std::string inner = text.substr(first + 1, last - first - 1);
            int depth = 0;
            std::size_t split = std::string::npos;
            for (std::size_t i = 0; i < inner.size(); ++i) {
                if (inner[i] == '(')
                    ++depth;
                else if (inner[i] == ')')
                    --depth;
                else if (inner[i] == ',' && depth == 0) {
                    if (split != std::string::npos)
                        throw ExpressionError("vector expression '" + text + "' must have two components");
                    split = i;
                }
            }
            if (split == std::string::npos)
                throw ExpressionError("vector expression '" + text + "' must have two components");
            return {Expression::parse(inner.substr(0, split)), Expression::parse(inner.substr(split + 1))};
        }
        return ExprField(Expression::parse(text));
    }

    int arity() const { return static_cast<int>(components.size()); }
    bool is_zero() const
    {
        for (const auto &c : components)
            if (!c.is_constant() || c.constant_value() != 0.0)
                return false;
        return true;
    }
};

/// An expression together with its partial derivatives, for evaluating
/// derivatives along a curve with respect to arc length.
class ArcDifferentiable {
public:
    explicit ArcDifferentiable(Expression e)
        : f_(std::move(e)), fx_(f_.derivative(Var::X)), fy_(f_.derivative(Var::Y)), ft_(f_.derivative(Var::T)),
          fth_(f_.derivative(Var::Theta)), has_theta_(f_.depends_on(Var::Theta))
    {
    }

    double value(const EvalContext &ctx) const { return f_.eval(ctx); }

    /// d/ds along unit tangent `tau`; the arc parameter t advances with s.
    double derivative(const EvalContext &ctx, const Vec2 &tau) const
    {
        double d = fx_.eval(ctx) * tau.x + fy_.eval(ctx) * tau.y + ft_.eval(ctx);
        if (has_theta_) {
            const Vec2 r{ctx.x - ctx.theta_origin.x, ctx.y - ctx.theta_origin.y};
            d += fth_.eval(ctx) * cross(r, tau) / dot(r, r);
        }
        return d;
    }

private:
    Expression f_, fx_, fy_, ft_, fth_;
    bool has_theta_;
};

} // namespace defeat
