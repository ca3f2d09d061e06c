#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "utweak/euler.hpp"
#include "utweak/model.hpp"

namespace utweak {

enum class Verdict { Pass, Fail, Inapplicable };
const char* to_string(Verdict v);

/// Point (and direction, for N-D checks) where a check is tightest.
struct Witness {
    std::vector<double> x;
    std::vector<double> xi;
    double value = 0.0;
};

struct CheckResult {
    std::string name;
    Verdict verdict = Verdict::Inapplicable;
    /// The checked quantity (minimum, maximum or fitted constant).
    double value = 0.0;
    std::optional<Witness> witness;
    std::vector<std::string> notes;
    nlohmann::json details = nlohmann::json::object();

    nlohmann::json to_json() const;
};

struct ConditionReport {
    std::string model;
    std::vector<CheckResult> checks;

    bool failed() const;
    const CheckResult* find(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// x -> lambda(x), or nullopt at a singular point.
class LambdaFunction {
public:
    using Fn = std::function<std::optional<double>(const double*)>;
    LambdaFunction(int dim, Fn fn, std::string description);

    static LambdaFunction constant(double c, int dim);
    /// DSL expression; domain errors and listed singular points map to nullopt.
    static LambdaFunction expression(const std::string& src, int dim,
                                     std::vector<double> singular_points = {});
    /// -[V1, V0] V1 / |V1|^2 from a one-dimensional single-noise model.
    static LambdaFunction from_model(const SdeModel& model);

    int dim() const { return dim_; }
    const std::string& description() const { return description_; }
    std::optional<double> operator()(const double* x) const { return fn_(x); }
    std::optional<double> operator()(double x) const { return fn_(&x); }
    PointFunction as_point_function() const { return fn_; }

private:
    int dim_;
    Fn fn_;
    std::string description_;
};

/// lambda(x) = -[V1, V0](x) V1(x) / |V1(x)|^2 in one dimension; nullopt when
/// |V1(x)| < 1e-12.
std::optional<double> loac_lambda_1d(const VectorField& v0, const VectorField& v1, double x);

/// Evenly spread unit vectors in R^n plus the coordinate directions.
std::vector<std::vector<double>> unit_directions(int n, int count = 64);

/// Regular 1-D grid lo, lo + step, ..., hi (inclusive up to rounding).
std::vector<double> linear_grid(double lo, double hi, double step);

struct LoacEstimate {
    std::vector<std::optional<double>> lambda;  // per grid point
    CheckResult report;
};

/// For each x: min over xi with |xi.V(x)| > 1e-10 of
/// -(xi.[V,V0](x)) (V(x).xi) / |xi.V(x)|^2.
LoacEstimate loac_check_nd(const VectorField& v, const VectorField& v0,
                           const std::vector<std::vector<double>>& grid_x,
                           const std::vector<std::vector<double>>& grid_xi);

/// Max over the grid of |[V, V_k](x)| per k; passes when all are below 1e-8.
CheckResult commutation_check(const VectorField& v, const std::vector<VectorField>& diffusions,
                              const std::vector<std::vector<double>>& grid_x);

/// Passes when the estimated uniform ellipticity constant exceeds this.
inline constexpr double kEllipticityFloor = 1e-6;

/// nu = min over the grids of sum_k |xi.V_k(x)|^2.
CheckResult ellipticity_check(const std::vector<VectorField>& diffusions, int dim,
                              const std::vector<std::vector<double>>& grid_x,
                              const std::vector<std::vector<double>>& grid_xi);

/// Lg(x) = U0.grad g + sum_k V_k^T (D^2 g) V_k for a callable g generic over
/// the scalar type (called with Jet<1> and Jet<2> arguments).
template <class G>
double apply_generator(const SdeModel& model, const G& g, std::span<const double> x) {
    const int n = model.dim();
    std::vector<double> u(static_cast<std::size_t>(n)), v(static_cast<std::size_t>(n));
    model.ito_drift(x.data(), u.data());
    SmallVec<Jet<2>> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[i] = Jet<2>::variable(x[i], u[i]);
    double out = g(xs.data()).coeff(1);
    for (const auto& vk : model.diffusions()) {
        vk(x.data(), v.data());
        for (int i = 0; i < n; ++i) xs[i] = Jet<2>::variable(x[i], v[i]);
        out += 2.0 * g(xs.data()).coeff(2);
    }
    return out;
}
double apply_generator(const SdeModel& model, const ScalarFunction& g, std::span<const double> x);

/// Xi(x) = L cosh(alpha x) / cosh(alpha x) = s alpha^2 + alpha b(x) tanh(alpha x)
/// with s = sum_k V_k^2, for one-dimensional additive-noise models.
double xi_function(const SdeModel& model, double alpha, double x);

struct GapResult {
    double alpha = 0.0;
    double lo = 0.0, hi = 0.0, step = 0.0;
    std::size_t points = 0;
    double infimum = 0.0;
    double lambda0 = 0.0;  // infimum / 2
    double argmin = 0.0;
    double left_value = 0.0, right_value = 0.0;
    std::vector<std::string> warnings;
    bool passed() const { return infimum > 0.0; }
    nlohmann::json to_json() const;
};

/// Infimum of 2 lambda - Xi over a 1-D grid. Throws PreconditionError when
/// lambda is singular on the grid.
GapResult gap_check(const LambdaFunction& lambda, const std::function<double(double)>& xi,
                    const std::vector<double>& grid, double alpha = 0.0);

/// CSV x,lambda,xi,gap over a grid.
std::string gap_csv(const LambdaFunction& lambda, const std::function<double(double)>& xi,
                    const std::vector<double>& grid);

/// Smallest d with LG <= -cG + d on the grid. With c unset, scans
/// c in {1, 0.5, 0.25, 0.1, 0.05, 0.01} and keeps the largest that passes.
/// A c is accepted only if, at tail probes (the outermost grid points scaled
/// by 2, 10, 100, 1000), LG/G <= -c and LG + cG <= d.
CheckResult lyapunov_check(const SdeModel& model, const ScalarFunction& g,
                           const std::vector<std::vector<double>>& grid,
                           std::optional<double> c = std::nullopt);

/// x.b(x) <= -|x|^2 at every grid point with |x| > radius.
CheckResult outward_drift_check(const SdeModel& model, const std::vector<std::vector<double>>& grid,
                                double radius);

/// Change of variables h(x) = int_{x0}^x 1/U1 turning a one-dimensional
/// elliptic model into dY = b_Y(Y) dt + sqrt(2) dB, where U1 = (sum_k V_k^2)^{1/2}
/// and b_Y = (U0 - U1 U1') / U1 at h^{-1}(y).
class LampertiTransform {
public:
    /// Throws PreconditionError unless U1 >= sqrt(kEllipticityFloor) on [lo, hi].
    LampertiTransform(const SdeModel& model, double x0, double lo, double hi);

    double h(double x) const;
    /// Bisection safeguarded Newton to 1e-12.
    double inverse(double y) const;
    /// Same, starting from a known pair h(x_hint) = y_hint.
    double inverse(double y, double x_hint, double y_hint) const;

    double u1(double x) const;
    /// b_Y(y) evaluated at x = h^{-1}(y).
    double drift_at(double x) const;
    /// b_Y'(y) at x = h^{-1}(y), by the chain rule.
    double drift_derivative_at(double x) const;

    /// Euler path of the transformed equation mapped back to x, with the
    /// given increments.
    std::vector<double> euler_path(double delta, std::span<const double> dB) const;

private:
    double integral(double a, double b) const;
    template <class T>
    T reduced_drift_over_u1(const T& x) const;

    const SdeModel& model_;
    double x0_, lo_, hi_;
};

/// Structural checks (a) ellipticity, (b) derivative growth, (c) derivative
/// decay via the gap criterion, (d) left to the moment estimators.
ConditionReport hypothesis_report(const SdeModel& model, double alpha,
                                  const std::vector<double>& grid_1d,
                                  const std::vector<std::vector<double>>& grid_nd);

/// Default grids: [-60, 60] step 1e-2 in one dimension, a 41 x 41 box of
/// half-width 10 otherwise.
std::vector<double> default_grid_1d();
std::vector<std::vector<double>> default_grid_nd(int dim);

}  // namespace utweak
