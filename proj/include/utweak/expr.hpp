#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "utweak/errors.hpp"
#include "utweak/jet.hpp"

namespace utweak {

enum class Func { Sin, Cos, Tan, Atan, Tanh, Sinh, Cosh, Exp, Log, Sqrt, Smoothstep5, Indicator };

/// Name used in source text, e.g. "atan".
const char* func_name(Func f);
/// Number of arguments the function takes.
int func_arity(Func f);

/// Immutable expression tree over x1..xN.
class Expr {
public:
    enum class Kind { Num, Var, Add, Sub, Mul, Div, Neg, Pow, Call };

    struct Node {
        Kind kind;
        double value = 0.0;  // Num
        int index = 0;       // Var, 0-based
        Func func = Func::Sin;
        std::vector<std::shared_ptr<const Node>> args;
    };
    using NodePtr = std::shared_ptr<const Node>;

    /// Parses `src` with variables x1..x`dim`. Throws ParseError.
    static Expr parse(std::string_view src, int dim);

    explicit Expr(NodePtr r) : root_(std::move(r)) {}

    static Expr number(double v);
    static Expr variable(int index);

    const Node& root() const { return *root_; }
    NodePtr root_ptr() const { return root_; }

    /// Minimal-parenthesis rendering; parsing it gives back an equal tree.
    std::string to_string() const;

    /// Largest 0-based variable index used, or -1.
    int max_variable() const;
    bool is_constant() const { return max_variable() < 0; }
    /// Value of a variable-free expression.
    std::optional<double> constant_value() const;

    /// Recognises x_i, x_i^2 and x_i*x_i; returns (index, power).
    std::optional<std::pair<int, int>> as_monomial() const;

    friend bool operator==(const Expr& a, const Expr& b);

private:
    NodePtr root_;
};

/// Postfix byte code compiled from an Expr, evaluable on doubles or jets.
class Program {
public:
    enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, PowInt, PowReal, Pow, Call };
    struct Instr {
        Op op;
        int arg = 0;
        double value = 0.0;
        Func func = Func::Sin;
    };

    static constexpr int kMaxStack = 40;

    explicit Program(const Expr& e);

    /// Evaluates at x (length >= number of variables). Throws DomainError.
    template <class T>
    T eval(const T* x) const;

    const std::vector<Instr>& code() const { return code_; }

private:
    std::vector<Instr> code_;
};

// ---------------------------------------------------------------------------

namespace detail {

inline double scalar_of(double v) { return v; }
template <int K, class T>
double scalar_of(const Jet<K, T>& j) {
    return scalar_value(j);
}

template <class T>
T smoothstep5(const T& r, const T& a, const T& b) {
    const double rv = scalar_of(r), av = scalar_of(a), bv = scalar_of(b);
    if (!(bv > av)) throw DomainError("smoothstep5 needs a < b");
    if (rv <= av) return T(0.0);
    if (rv >= bv) return T(1.0);
    const T s = (r - a) / (b - a);
    const T s3 = s * s * s;
    return s3 * (s * (s * 6.0 - 15.0) + 10.0);
}

template <class T>
T call1(Func f, const T& a) {
    using std::atan;
    using std::cos;
    using std::cosh;
    using std::exp;
    using std::log;
    using std::sin;
    using std::sinh;
    using std::sqrt;
    using std::tan;
    using std::tanh;
    switch (f) {
        case Func::Sin: return sin(a);
        case Func::Cos: return cos(a);
        case Func::Tan:
            if (cos(scalar_of(a)) == 0.0) throw DomainError("tan at a pole");
            return tan(a);
        case Func::Atan: return atan(a);
        case Func::Tanh: return tanh(a);
        case Func::Sinh: return sinh(a);
        case Func::Cosh: return cosh(a);
        case Func::Exp: return exp(a);
        case Func::Log:
            if (!(scalar_of(a) > 0.0)) throw DomainError("log of a non-positive value");
            return log(a);
        case Func::Sqrt:
            if (scalar_of(a) < 0.0) throw DomainError("sqrt of a negative value");
            return sqrt(a);
        case Func::Indicator: return T(scalar_of(a) > 0.0 ? 1.0 : 0.0);
        case Func::Smoothstep5: break;
    }
    throw DomainError("bad function arity");
}

template <class T>
T pow_real(const T& a, double c) {
    using std::pow;
    const double av = scalar_of(a);
    if (av < 0.0) throw DomainError("non-integer power of a negative value");
    if (av == 0.0) {
        if (c < 0.0) throw DomainError("negative power of zero");
        if constexpr (is_jet_v<T>)
            throw DomainError("derivative of a fractional power at zero");
        else
            return 0.0;
    }
    return pow(a, c);
}

}  // namespace detail

template <class T>
T Program::eval(const T* x) const {
    alignas(T) std::byte raw[sizeof(T) * kMaxStack];
    T* st = std::launder(reinterpret_cast<T*>(raw));
    int sp = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
            case Op::Const: new (&st[sp++]) T(in.value); break;
            case Op::Var: new (&st[sp++]) T(x[in.arg]); break;
            case Op::Add: st[sp - 2] = st[sp - 2] + st[sp - 1]; --sp; break;
            case Op::Sub: st[sp - 2] = st[sp - 2] - st[sp - 1]; --sp; break;
            case Op::Mul: st[sp - 2] = st[sp - 2] * st[sp - 1]; --sp; break;
            case Op::Div:
                if (detail::scalar_of(st[sp - 1]) == 0.0) throw DomainError("division by zero");
                st[sp - 2] = st[sp - 2] / st[sp - 1];
                --sp;
                break;
            case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::PowInt:
                if (in.arg < 0 && detail::scalar_of(st[sp - 1]) == 0.0)
                    throw DomainError("division by zero");
                st[sp - 1] = powi(st[sp - 1], in.arg);
                break;
            case Op::PowReal: st[sp - 1] = detail::pow_real(st[sp - 1], in.value); break;
            case Op::Pow: {
                using std::exp;
                using std::log;
                if (!(detail::scalar_of(st[sp - 2]) > 0.0))
                    throw DomainError("variable power of a non-positive value");
                st[sp - 2] = exp(st[sp - 1] * log(st[sp - 2]));
                --sp;
                break;
            }
            case Op::Call:
                if (in.func == Func::Smoothstep5) {
                    st[sp - 3] = detail::smoothstep5(st[sp - 3], st[sp - 2], st[sp - 1]);
                    sp -= 2;
                } else {
                    st[sp - 1] = detail::call1(in.func, st[sp - 1]);
                }
                break;
        }
    }
    return st[0];
}

}  // namespace utweak
