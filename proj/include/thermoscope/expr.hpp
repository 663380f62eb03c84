#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace thermoscope {

// Arithmetic expressions in one variable x over +,-,*,/,^,log,exp.
// Enough to describe the correction term h of a potential spec file.
struct Expr {
    enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Log, Exp, Neg };
    Kind kind;
    double value = 0.0;
    std::shared_ptr<const Expr> a, b;

    static std::shared_ptr<const Expr> constant(double v) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Const;
        e->value = v;
        return e;
    }
    static std::shared_ptr<const Expr> var() {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Var;
        return e;
    }
    static std::shared_ptr<const Expr> node(Kind k, std::shared_ptr<const Expr> a,
                                            std::shared_ptr<const Expr> b = nullptr) {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->a = std::move(a);
        e->b = std::move(b);
        return e;
    }
};

using ExprPtr = std::shared_ptr<const Expr>;

inline double expr_eval(const ExprPtr& e, double x) {
    switch (e->kind) {
        case Expr::Kind::Const: return e->value;
        case Expr::Kind::Var: return x;
        case Expr::Kind::Add: return expr_eval(e->a, x) + expr_eval(e->b, x);
        case Expr::Kind::Sub: return expr_eval(e->a, x) - expr_eval(e->b, x);
        case Expr::Kind::Mul: return expr_eval(e->a, x) * expr_eval(e->b, x);
        case Expr::Kind::Div: return expr_eval(e->a, x) / expr_eval(e->b, x);
        case Expr::Kind::Pow: return std::pow(expr_eval(e->a, x), expr_eval(e->b, x));
        case Expr::Kind::Log: return std::log(expr_eval(e->a, x));
        case Expr::Kind::Exp: return std::exp(expr_eval(e->a, x));
        case Expr::Kind::Neg: return -expr_eval(e->a, x);
    }
    return 0.0;
}

inline ExprPtr expr_derivative(const ExprPtr& e) {
    using K = Expr::Kind;
    switch (e->kind) {
        case K::Const: return Expr::constant(0.0);
        case K::Var: return Expr::constant(1.0);
        case K::Add: return Expr::node(K::Add, expr_derivative(e->a), expr_derivative(e->b));
        case K::Sub: return Expr::node(K::Sub, expr_derivative(e->a), expr_derivative(e->b));
        case K::Mul:
            return Expr::node(K::Add, Expr::node(K::Mul, expr_derivative(e->a), e->b),
                              Expr::node(K::Mul, e->a, expr_derivative(e->b)));
        case K::Div:
            return Expr::node(
                K::Div,
                Expr::node(K::Sub, Expr::node(K::Mul, expr_derivative(e->a), e->b),
                           Expr::node(K::Mul, e->a, expr_derivative(e->b))),
                Expr::node(K::Mul, e->b, e->b));
        case K::Pow: {
            // u^v = exp(v log u); constant exponents get the plain power rule
            if (e->b->kind == K::Const) {
                double n = e->b->value;
                return Expr::node(
                    K::Mul, Expr::constant(n),
                    Expr::node(K::Mul, Expr::node(K::Pow, e->a, Expr::constant(n - 1.0)),
                               expr_derivative(e->a)));
            }
            ExprPtr lnu = Expr::node(K::Log, e->a);
            ExprPtr inner = Expr::node(
                K::Add, Expr::node(K::Mul, expr_derivative(e->b), lnu),
                Expr::node(K::Div, Expr::node(K::Mul, e->b, expr_derivative(e->a)), e->a));
            return Expr::node(K::Mul, e, inner);
        }
        case K::Log: return Expr::node(K::Div, expr_derivative(e->a), e->a);
        case K::Exp: return Expr::node(K::Mul, e, expr_derivative(e->a));
        case K::Neg: return Expr::node(K::Neg, expr_derivative(e->a));
    }
    return Expr::constant(0.0);
}

namespace detail {

class ExprParser {
  public:
    explicit ExprParser(const std::string& s) : src_(s) {}

    ExprPtr parse() {
        ExprPtr e = sum();
        skip_ws();
        if (pos_ != src_.size()) fail("trailing input");
        return e;
    }

  private:
    const std::string& src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) {
        throw std::runtime_error("expression parse error at offset " + std::to_string(pos_) +
                                 ": " + what);
    }
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    ExprPtr sum() {
        ExprPtr e = term();
        for (;;) {
            if (eat('+')) e = Expr::node(Expr::Kind::Add, e, term());
            else if (eat('-')) e = Expr::node(Expr::Kind::Sub, e, term());
            else return e;
        }
    }
    ExprPtr term() {
        ExprPtr e = unary();
        for (;;) {
            if (eat('*')) e = Expr::node(Expr::Kind::Mul, e, unary());
            else if (eat('/')) e = Expr::node(Expr::Kind::Div, e, unary());
            else return e;
        }
    }
    ExprPtr unary() {
        if (eat('-')) return Expr::node(Expr::Kind::Neg, unary());
        eat('+');
        return power();
    }
    ExprPtr power() {
        ExprPtr base = atom();
        if (eat('^')) return Expr::node(Expr::Kind::Pow, base, unary()); // right associative
        return base;
    }
    ExprPtr atom() {
        skip_ws();
        if (eat('(')) {
            ExprPtr e = sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t end = 0;
            double v = std::stod(src_.substr(pos_), &end);
            pos_ += end;
            return Expr::constant(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            std::string name = src_.substr(start, pos_ - start);
            if (name == "x") return Expr::var();
            if (name == "log" || name == "exp") {
                if (!eat('(')) fail("expected '(' after " + name);
                ExprPtr arg = sum();
                if (!eat(')')) fail("expected ')'");
                return Expr::node(name == "log" ? Expr::Kind::Log : Expr::Kind::Exp, arg);
            }
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected character");
    }
};

} // namespace detail

inline ExprPtr parse_expression(const std::string& s) { return detail::ExprParser(s).parse(); }

} // namespace thermoscope
