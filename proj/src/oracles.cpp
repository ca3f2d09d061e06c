#include "utweak/oracles.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>

#include "utweak/errors.hpp"

namespace utweak {

std::pair<double, double> grusin_variances(double t, double delta, int n) {
    if (t < 0.0 || n < 0 || !(delta > 0.0)) throw PreconditionError("grusin_variances: bad arguments");
    // (1+delta)^{2n} - 1 through expm1/log1p keeps full precision for small delta.
    const double euler = 2.0 * std::expm1(2.0 * n * std::log1p(delta)) / (2.0 + delta);
    return {std::expm1(2.0 * t), euler};
}

std::vector<double> circle_exact(double t, std::span<const double> x) {
    if (x.size() != 2) throw DimensionError("circle_exact needs a point in R^2");
    if (std::hypot(x[0], x[1]) >= 2.0) throw PreconditionError("circle_exact needs |x| < 2");
    return {x[0] * std::cos(t) - x[1] * std::sin(t), x[0] * std::sin(t) + x[1] * std::cos(t)};
}

double circle_psi(double r) {
    if (r <= 2.0) return 0.0;
    if (r >= 3.0) return -1.0;
    const double s = r - 2.0;
    return -s * s * s * (s * (s * 6.0 - 15.0) + 10.0);
}

std::vector<double> circle_radius_recurrence(double delta, double r0, int n_steps,
                                             const std::function<double(double)>& psi) {
    std::vector<double> r{r0};
    r.reserve(static_cast<std::size_t>(n_steps) + 1);
    for (int n = 0; n < n_steps; ++n) {
        const double f = 1.0 + psi(std::sqrt(r.back())) * delta;
        r.push_back((f * f + delta * delta) * r.back());
    }
    return r;
}

double circle_divergence(double delta, int n_steps) {
    const auto r = circle_radius_recurrence(delta, 1.0, n_steps);
    double sup = -std::numeric_limits<double>::infinity();
    for (double v : r) sup = std::max(sup, v - 1.0);  // |X_t|^2 = 1 on the exact orbit
    return sup;
}

double xcubed_threshold(double delta) {
    if (!(delta > 0.0)) throw PreconditionError("step size must be positive");
    return 4.0 + 4.0 / (delta * delta);
}

double CoshBound::bound(double x0) const { return std::cosh(x0) + b / (1.0 - a); }

CoshBound cosh_bound_constants(double delta, double alpha, double beta) {
    constexpr double k = std::numbers::pi * std::numbers::pi / 8.0;
    CoshBound c{delta, alpha, beta};
    const double e = std::exp(delta);
    c.a = e * (1.0 - alpha * delta + k * delta * delta);
    c.b = e * beta * delta + e * k * delta * delta * std::cosh(std::numbers::pi * delta / 2.0);
    if (!(c.a > 0.0 && c.a < 1.0))
        throw PreconditionError("cosh bound needs 0 < a < 1; reduce the step or raise alpha");
    return c;
}

double cosh_beta(double alpha) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = -30000; i <= 30000; ++i) {
        const double x = i * 1e-3;
        best = std::max(best, -std::atan(x) * std::sinh(x) + alpha * std::cosh(x));
    }
    return best;
}

}  // namespace utweak
