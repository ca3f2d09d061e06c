#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "utweak/model.hpp"

namespace utweak {

/// Per-component moment as a function of (t, x0).
using MomentFn = std::function<std::vector<double>(double t, std::span<const double> x0)>;

/// Exact solution on a fine grid of step h driven by the given Brownian
/// increments (n_steps x noise_count). Returns (n_steps + 1) x dim states.
using ExactPathFn = std::function<std::vector<double>(std::span<const double> x0, double h,
                                                      int n_steps, std::span<const double> dB)>;

/// Unnormalised one-dimensional invariant density with its quadrature domain.
struct InvariantDensity {
    std::function<double(double)> unnormalized;
    double lo = 0.0;
    double hi = 0.0;
};

struct ExactOracle {
    MomentFn mean;
    MomentFn variance;
    /// The law at each time is Gaussian, so mean and variance determine it.
    bool gaussian = false;
    ExactPathFn path;
    std::optional<InvariantDensity> density;
};

struct ExampleSpec {
    std::string name;
    std::string description;
    SdeModel model;
    ExactOracle oracle;
    std::vector<double> x0;
    std::vector<double> deltas;
    double horizon = 10.0;
    /// Scale of the cosh(alpha x) Lyapunov function.
    double alpha = 0.5;
    /// Closed-form local obtuse-angle function, when one is known.
    std::optional<std::string> lambda;
    /// Constants quoted alongside the example, by name.
    std::map<std::string, double> constants;
};

/// Names accepted by builtin_example, in catalogue order.
const std::vector<std::string>& builtin_names();

/// Throws Error for an unknown name.
ExampleSpec builtin_example(const std::string& name);

/// Normalised expectation of phi under the invariant density, by adaptive
/// Gauss-Kronrod quadrature. Throws UnsupportedError without a density and
/// QuadratureError when the error estimate exceeds 1e-8.
double invariant_expectation(const ExampleSpec& spec, const std::function<double(double)>& phi);

}  // namespace utweak
