#pragma once

#include <boost/container/small_vector.hpp>

#include <span>
#include <string>
#include <vector>

#include "utweak/expr.hpp"
#include "utweak/jet.hpp"

namespace utweak {

template <class T>
using SmallVec = boost::container::small_vector<T, 4>;

/// Dense row-major matrix.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

/// One parsed expression of x1..xN with its compiled program.
class ScalarFunction {
public:
    ScalarFunction(const Expr& e, int dim);
    static ScalarFunction parse(std::string_view src, int dim);

    int dim() const { return dim_; }
    const Expr& expr() const { return expr_; }
    std::string source() const { return expr_.to_string(); }
    bool is_constant() const { return expr_.is_constant(); }

    template <class T>
    T operator()(const T* x) const {
        return prog_.eval(x);
    }
    double operator()(std::span<const double> x) const { return prog_.eval(x.data()); }

private:
    Expr expr_;
    Program prog_;
    int dim_;
};

/// A smooth map R^N -> R^N given componentwise by expressions.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(std::vector<ScalarFunction> components);
    /// Throws ParseError when a source is malformed, DimensionError when the
    /// number of sources differs from `dim`.
    static VectorField parse(const std::vector<std::string>& sources, int dim);
    /// Zero field in dimension `dim`.
    static VectorField zero(int dim);

    int dim() const { return static_cast<int>(comps_.size()); }
    const std::vector<ScalarFunction>& components() const { return comps_; }
    std::vector<std::string> sources() const;
    bool is_constant() const;

    /// Componentwise evaluation; DomainError carries the component index.
    template <class T>
    void operator()(const T* x, T* out) const {
        int i = 0;
        try {
            for (; i < dim(); ++i) out[i] = comps_[static_cast<std::size_t>(i)](x);
        } catch (const DomainError& e) {
            if (e.component() >= 0) throw;
            throw DomainError(e.what(), i);
        }
    }
    std::vector<double> operator()(std::span<const double> x) const;

    /// Entry (i, j) is the derivative of component i in x_j.
    Matrix jacobian(std::span<const double> x) const;

private:
    std::vector<ScalarFunction> comps_;
};

/// (DF)(x) w: derivative of the callable F at x in direction w.
/// F must accept (const Jet<1,T>*, Jet<1,T>*).
template <class F, class T>
void directional_derivative(const F& f, int n, const T* x, const T* w, T* out) {
    SmallVec<Jet<1, T>> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[i] = Jet<1, T>::variable(x[i], w[i]);
    f(xs.data(), ys.data());
    for (int i = 0; i < n; ++i) out[i] = ys[i].coeff(1);
}

/// [V, W](x) = (DW)V - (DV)W for callables V, W generic over the scalar type.
template <class FV, class FW, class T>
void lie_bracket(const FV& v, const FW& w, int n, const T* x, T* out) {
    SmallVec<T> vx(static_cast<std::size_t>(n)), wx(static_cast<std::size_t>(n)),
        dv(static_cast<std::size_t>(n));
    v(x, vx.data());
    w(x, wx.data());
    directional_derivative(w, n, x, vx.data(), out);
    directional_derivative(v, n, x, wx.data(), dv.data());
    for (int i = 0; i < n; ++i) out[i] = out[i] - dv[i];
}

/// Commutator of two parsed fields at a point. Throws DimensionError.
std::vector<double> commutator(const VectorField& v, const VectorField& w,
                               std::span<const double> x);

/// Sum over k of (DV_k) V_k, the difference between the two drift conventions.
template <class T>
void convention_correction(const std::vector<VectorField>& diffusions, int n, const T* x,
                           T* out) {
    for (int i = 0; i < n; ++i) out[i] = T(0.0);
    SmallVec<T> vk(static_cast<std::size_t>(n)), dvk(static_cast<std::size_t>(n));
    for (const auto& v : diffusions) {
        if (v.is_constant()) continue;
        v(x, vk.data());
        directional_derivative(v, n, x, vk.data(), dvk.data());
        for (int i = 0; i < n; ++i) out[i] = out[i] + dvk[i];
    }
}

/// Ito drift U0 = V0 + sum_k (DV_k) V_k of a Stratonovich drift V0.
std::vector<double> ito_drift(const VectorField& v0, const std::vector<VectorField>& diffusions,
                              std::span<const double> x);
/// Inverse of ito_drift: V0 = U0 - sum_k (DV_k) V_k.
std::vector<double> stratonovich_drift(const VectorField& u0,
                                       const std::vector<VectorField>& diffusions,
                                       std::span<const double> x);

}  // namespace utweak
