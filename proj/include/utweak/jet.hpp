#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace utweak {

/// Truncated Taylor series in one seed direction.
///
/// `coeff(k)` holds f^(k)/k! for k = 0..Order. The value type may itself be a
/// jet, which gives mixed derivatives (e.g. Jet<1, Jet<1>> for second-order
/// directional derivatives of a commutator).
template <int Order, class T = double>
class Jet {
    static_assert(Order >= 0 && Order <= 8);

public:
    using value_type = T;
    static constexpr int order = Order;

    constexpr Jet() : c_{} {}
    constexpr Jet(double v) : c_{} { c_[0] = T(v); }
    constexpr Jet(const T& v)
        requires(!std::is_same_v<T, double>)
        : c_{} {
        c_[0] = v;
    }

    /// Seeds a variable: value `v` moving with unit speed along the direction.
    static constexpr Jet variable(const T& v, const T& speed = T(1.0)) {
        Jet j;
        j.c_[0] = v;
        if constexpr (Order >= 1) j.c_[1] = speed;
        return j;
    }

    constexpr const T& coeff(int k) const { return c_[static_cast<std::size_t>(k)]; }
    constexpr T& coeff(int k) { return c_[static_cast<std::size_t>(k)]; }
    constexpr const T& value() const { return c_[0]; }

    /// k-th derivative along the seed direction (k! * coeff(k)).
    T derivative(int k) const {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return c_[static_cast<std::size_t>(k)] * f;
    }

    Jet& operator+=(const Jet& o) {
        for (int k = 0; k <= Order; ++k) c_[k] = c_[k] + o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int k = 0; k <= Order; ++k) c_[k] = c_[k] - o.c_[k];
        return *this;
    }
    Jet& operator*=(double s) {
        for (auto& c : c_) c = c * s;
        return *this;
    }

private:
    std::array<T, Order + 1> c_;
};

template <class T>
struct is_jet : std::false_type {};
template <int K, class T>
struct is_jet<Jet<K, T>> : std::true_type {};
template <class T>
inline constexpr bool is_jet_v = is_jet<T>::value;

/// Innermost scalar value of a (possibly nested) jet.
inline double scalar_value(double v) { return v; }
template <int K, class T>
double scalar_value(const Jet<K, T>& j) {
    return scalar_value(j.value());
}

/// True iff every coefficient at every nesting level is finite.
inline bool all_finite(double v) { return std::isfinite(v); }
template <int K, class T>
bool all_finite(const Jet<K, T>& j) {
    for (int k = 0; k <= K; ++k)
        if (!all_finite(j.coeff(k))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Arithmetic
// ---------------------------------------------------------------------------

template <int K, class T>
Jet<K, T> operator+(Jet<K, T> a, const Jet<K, T>& b) {
    return a += b;
}
template <int K, class T>
Jet<K, T> operator-(Jet<K, T> a, const Jet<K, T>& b) {
    return a -= b;
}
template <int K, class T>
Jet<K, T> operator-(const Jet<K, T>& a) {
    Jet<K, T> r;
    for (int k = 0; k <= K; ++k) r.coeff(k) = -a.coeff(k);
    return r;
}
template <int K, class T>
Jet<K, T> operator+(Jet<K, T> a, double s) {
    a.coeff(0) = a.coeff(0) + s;
    return a;
}
template <int K, class T>
Jet<K, T> operator+(double s, Jet<K, T> a) {
    return a + s;
}
template <int K, class T>
Jet<K, T> operator-(Jet<K, T> a, double s) {
    a.coeff(0) = a.coeff(0) - s;
    return a;
}
template <int K, class T>
Jet<K, T> operator-(double s, const Jet<K, T>& a) {
    return (-a) + s;
}
template <int K, class T>
Jet<K, T> operator*(Jet<K, T> a, double s) {
    return a *= s;
}
template <int K, class T>
Jet<K, T> operator*(double s, Jet<K, T> a) {
    return a *= s;
}
template <int K, class T>
Jet<K, T> operator/(Jet<K, T> a, double s) {
    return a *= (1.0 / s);
}

template <int K, class T>
Jet<K, T> operator*(const Jet<K, T>& a, const Jet<K, T>& b) {
    Jet<K, T> r;
    for (int k = 0; k <= K; ++k) {
        T s = a.coeff(0) * b.coeff(k);
        for (int j = 1; j <= k; ++j) s = s + a.coeff(j) * b.coeff(k - j);
        r.coeff(k) = s;
    }
    return r;
}

template <int K, class T>
Jet<K, T> operator/(const Jet<K, T>& a, const Jet<K, T>& b) {
    Jet<K, T> q;
    const T inv = T(1.0) / b.coeff(0);
    for (int k = 0; k <= K; ++k) {
        T s = a.coeff(k);
        for (int j = 0; j < k; ++j) s = s - q.coeff(j) * b.coeff(k - j);
        q.coeff(k) = s * inv;
    }
    return q;
}

template <int K, class T>
Jet<K, T> operator/(double s, const Jet<K, T>& b) {
    return Jet<K, T>(s) / b;
}

// ---------------------------------------------------------------------------
// Elementary functions. Each uses the standard first-order ODE recurrence
// f' = g(f, a) a', which keeps the cost at O(K^2) per call.
// ---------------------------------------------------------------------------

namespace detail {
// r_k = (1/k) sum_{j=1..k} j a_j w_{k-j}
template <int K, class T>
T integrate_product(const Jet<K, T>& a, const Jet<K, T>& w, int k) {
    T s = a.coeff(1) * w.coeff(k - 1);
    for (int j = 2; j <= k; ++j) s = s + a.coeff(j) * w.coeff(k - j) * double(j);
    return s * (1.0 / k);
}
}  // namespace detail

template <int K, class T>
Jet<K, T> exp(const Jet<K, T>& a) {
    using std::exp;
    Jet<K, T> e;
    e.coeff(0) = exp(a.coeff(0));
    for (int k = 1; k <= K; ++k) e.coeff(k) = detail::integrate_product(a, e, k);
    return e;
}

template <int K, class T>
Jet<K, T> log(const Jet<K, T>& a) {
    using std::log;
    Jet<K, T> l;
    l.coeff(0) = log(a.coeff(0));
    const T inv = T(1.0) / a.coeff(0);
    for (int k = 1; k <= K; ++k) {
        T s = a.coeff(k);
        for (int j = 1; j < k; ++j) s = s - l.coeff(j) * a.coeff(k - j) * (double(j) / k);
        l.coeff(k) = s * inv;
    }
    return l;
}

template <int K, class T>
Jet<K, T> sqrt(const Jet<K, T>& a) {
    using std::sqrt;
    Jet<K, T> r;
    r.coeff(0) = sqrt(a.coeff(0));
    const T inv = T(0.5) / r.coeff(0);
    for (int k = 1; k <= K; ++k) {
        T s = a.coeff(k);
        for (int j = 1; j < k; ++j) s = s - r.coeff(j) * r.coeff(k - j);
        r.coeff(k) = s * inv;
    }
    return r;
}

namespace detail {
template <int K, class T, bool Hyperbolic>
void sin_cos(const Jet<K, T>& a, Jet<K, T>& s, Jet<K, T>& c) {
    using std::cos;
    using std::cosh;
    using std::sin;
    using std::sinh;
    if constexpr (Hyperbolic) {
        s.coeff(0) = sinh(a.coeff(0));
        c.coeff(0) = cosh(a.coeff(0));
    } else {
        s.coeff(0) = sin(a.coeff(0));
        c.coeff(0) = cos(a.coeff(0));
    }
    for (int k = 1; k <= K; ++k) {
        s.coeff(k) = integrate_product(a, c, k);
        const T ck = integrate_product(a, s, k);
        c.coeff(k) = Hyperbolic ? ck : -ck;
    }
}

// t' = (1 + sign t^2) a'
template <int K, class T>
Jet<K, T> tan_like(const Jet<K, T>& a, const T& t0, double sign) {
    Jet<K, T> t;
    Jet<K, T> w;
    t.coeff(0) = t0;
    w.coeff(0) = T(1.0) + t0 * t0 * sign;
    for (int k = 1; k <= K; ++k) {
        t.coeff(k) = integrate_product(a, w, k);
        T sq = t.coeff(0) * t.coeff(k);
        for (int i = 1; i <= k; ++i) sq = sq + t.coeff(i) * t.coeff(k - i);
        w.coeff(k) = sq * sign;
    }
    return t;
}
}  // namespace detail

template <int K, class T>
Jet<K, T> sin(const Jet<K, T>& a) {
    Jet<K, T> s, c;
    detail::sin_cos<K, T, false>(a, s, c);
    return s;
}
template <int K, class T>
Jet<K, T> cos(const Jet<K, T>& a) {
    Jet<K, T> s, c;
    detail::sin_cos<K, T, false>(a, s, c);
    return c;
}
template <int K, class T>
Jet<K, T> sinh(const Jet<K, T>& a) {
    Jet<K, T> s, c;
    detail::sin_cos<K, T, true>(a, s, c);
    return s;
}
template <int K, class T>
Jet<K, T> cosh(const Jet<K, T>& a) {
    Jet<K, T> s, c;
    detail::sin_cos<K, T, true>(a, s, c);
    return c;
}
template <int K, class T>
Jet<K, T> tan(const Jet<K, T>& a) {
    using std::tan;
    return detail::tan_like(a, T(tan(a.coeff(0))), 1.0);
}
template <int K, class T>
Jet<K, T> tanh(const Jet<K, T>& a) {
    using std::tanh;
    return detail::tan_like(a, T(tanh(a.coeff(0))), -1.0);
}

template <int K, class T>
Jet<K, T> atan(const Jet<K, T>& a) {
    using std::atan;
    const Jet<K, T> q = 1.0 / (a * a + 1.0);
    Jet<K, T> r;
    r.coeff(0) = atan(a.coeff(0));
    for (int k = 1; k <= K; ++k) r.coeff(k) = detail::integrate_product(a, q, k);
    return r;
}

/// a^c for real c; requires a(0) != 0.
template <int K, class T>
Jet<K, T> pow(const Jet<K, T>& a, double c) {
    using std::pow;
    Jet<K, T> p;
    p.coeff(0) = pow(a.coeff(0), c);
    const T inv = T(1.0) / a.coeff(0);
    for (int k = 1; k <= K; ++k) {
        T s = a.coeff(1) * p.coeff(k - 1) * (c - (k - 1));
        for (int j = 2; j <= k; ++j) s = s + a.coeff(j) * p.coeff(k - j) * (c * j - (k - j));
        p.coeff(k) = s * inv * (1.0 / k);
    }
    return p;
}

/// a^n for integer n by repeated squaring; exact at a(0) = 0 for n >= 0.
template <class T>
T powi(const T& a, int n) {
    if (n < 0) return T(1.0) / powi(a, -n);
    T result(1.0);
    T base = a;
    while (n > 0) {
        if (n & 1) result = result * base;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return result;
}

}  // namespace utweak
