#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace utweak {

/// (Var X_t^2, Var Y_{t_n}^2) for the Grusin example started at (1, 0):
/// e^{2t} - 1 and 2((1 + delta)^{2n} - 1)/(2 + delta).
std::pair<double, double> grusin_variances(double t, double delta, int n);

/// Rotation solution of the confined circle ODE; needs |x| < 2.
std::vector<double> circle_exact(double t, std::span<const double> x);

/// The confinement factor -smoothstep5(r, 2, 3) as a function of the radius.
double circle_psi(double radius);

/// Squared radius sequence R_{n+1} = ((1 + psi(sqrt R_n) delta)^2 + delta^2) R_n,
/// n = 0..n_steps.
std::vector<double> circle_radius_recurrence(double delta, double r0, int n_steps,
                                             const std::function<double(double)>& psi = circle_psi);

/// sup_n (R_n - |X_{t_n}|^2) for x0 = (1, 0), n <= n_steps.
double circle_divergence(double delta, int n_steps);

/// 4 + 4 / delta^2: above this initial second moment the Euler second
/// moments of the cubic model diverge.
double xcubed_threshold(double delta);

struct CoshBound {
    double delta = 0.0, alpha = 0.0, beta = 0.0;
    double a = 0.0;
    double b = 0.0;
    /// cosh(x0) + b / (1 - a)
    double bound(double x0) const;
};

/// a = e^delta (1 - alpha delta + pi^2 delta^2 / 8),
/// b = e^delta beta delta + e^delta (pi^2/8) delta^2 cosh(pi delta / 2).
/// Throws PreconditionError unless 0 < a < 1.
CoshBound cosh_bound_constants(double delta, double alpha, double beta);

/// Grid maximum of -atan(x) sinh(x) + alpha cosh(x) on [-30, 30], step 1e-3.
double cosh_beta(double alpha);

/// Default alpha for the cosh bound.
inline constexpr double kCoshAlpha = 1.3;

}  // namespace utweak
