#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "utweak/builtins.hpp"
#include "utweak/conditions.hpp"
#include "utweak/euler.hpp"

namespace utweak {

/// Monte Carlo run: start point, mesh, horizon and noise.
struct McConfig {
    std::vector<double> x0;
    double delta = 0.01;
    double horizon = 1.0;
    long n_paths = 1000;
    std::uint64_t seed = kDefaultSeed;
    int threads = 0;

    /// horizon / delta; throws PreconditionError unless it is an integer.
    int n_steps() const;
    nlohmann::json to_json() const;
};

/// Least-squares fit of log y = intercept - rate t over the given points
/// with y > 0.
struct LogLinearFit {
    double rate = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS in log space
    int points = 0;
};
LogLinearFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& y);

/// E phi(m + sqrt(v) Z) for standard normal Z.
double gaussian_expectation(const std::function<double(double)>& phi, double mean, double variance);

/// Per-step (mean, variance) of the Euler chain for a one-dimensional model
/// with affine drift and additive noise, or nullopt for any other model.
std::optional<std::vector<std::pair<double, double>>> linear_gaussian_euler(const SdeModel& model,
                                                                           double x0, double delta,
                                                                           int n_steps);

/// t -> E phi(X_t) from an example's oracle: any phi for Gaussian laws,
/// x_i and x_i^2 otherwise. Nullopt when the oracle cannot supply it.
std::optional<std::function<double(double)>> exact_observable_mean(const ExampleSpec& spec,
                                                                   const ScalarFunction& phi,
                                                                   std::vector<double> x0);

struct ErrorCurve {
    std::vector<double> t;
    std::vector<double> estimate;  // |E phi(reference) - E phi(Y)|
    std::vector<double> stderr_;
    std::vector<double> sup_so_far;
    std::vector<double> scheme_mean;
    std::vector<double> reference_mean;
    double delta = 0.0;
    double delta_ref = 0.0;  // 0 for an exact reference
    long n_paths = 0;
    std::uint64_t seed = 0;
    std::string reference;  // "exact", "closed_form" or "fine"
    long exploded = 0;
    bool growing = false;
    bool divergent = false;

    double sup() const;
    /// Standard error at the time where the supremum is attained.
    double sup_stderr() const;
    std::string to_csv() const;  // t,estimate,stderr,sup_so_far
    nlohmann::json to_json() const;
};

/// Weak error against an exact mean t -> E phi(X_t). One-dimensional affine
/// additive models are propagated in closed form (zero variance); everything
/// else is simulated.
ErrorCurve weak_error_exact(const SdeModel& model, const ScalarFunction& phi, const McConfig& cfg,
                            const std::function<double(double)>& exact);

/// Weak error of each coarse step in `deltas` against one fine reference at
/// min(deltas) / m sharing the Brownian path. Differences are averaged path
/// by path, so the standard error is that of the paired difference.
std::vector<ErrorCurve> weak_error_fine(const SdeModel& model, const ScalarFunction& phi,
                                        const McConfig& cfg, const std::vector<double>& deltas, int m);

struct MomentCurve {
    std::vector<double> t, mean, stderr_;
    std::vector<long> count;  // paths still finite at each time
    double sup = 0.0, sup_stderr = 0.0, sup_time = 0.0;
    long exploded = 0;
    int first_explosion_step = -1;

    std::string to_csv() const;  // t,estimate,stderr,sup_so_far
    nlohmann::json to_json() const;
};

/// Mean of |Y|^p u(Y) at each mesh time; exploded paths leave the mean and
/// are counted. An empty weight means u = 1.
MomentCurve moment_curve(const SdeModel& model, const McConfig& cfg,
                         const std::optional<ScalarFunction>& weight, double power);

struct DecayFit {
    std::vector<double> t, decay, stderr_;
    LogLinearFit fit;  // over the second half of the grid
    long singular_paths = 0;

    std::string to_csv() const;  // t,decay,stderr
    nlohmann::json to_json() const;
};

/// E exp(-2 int_0^t lambda(Y_s) ds); a path hitting a singular point of
/// lambda is dropped from that time on and counted.
DecayFit decay_functional(const SdeModel& model, const LambdaFunction& lambda, const McConfig& cfg);

struct DerivativeBound {
    double u_x0 = 1.0;
    double lambda0 = 0.0;
    double vf_norm = 1.0;
};

struct DerivativeCurve {
    std::vector<double> t, estimate, stderr_;
    LogLinearFit fit;  // of |estimate| over the second half
    long exploded = 0;
    /// Times where |estimate| > u e^{-lambda0 t} |Vf| + 3 stderr (with a bound).
    std::vector<double> violations;

    std::string to_csv() const;  // t,estimate,stderr[,bound]
    nlohmann::json to_json() const;
    std::optional<DerivativeBound> bound;
};

/// E[grad f(Y_t) . J_t V(x0)], the derivative of x -> E f(X_t^x) along V.
DerivativeCurve derivative_estimate(const SdeModel& model, const ScalarFunction& f,
                                    const VectorField& direction, const McConfig& cfg,
                                    std::optional<DerivativeBound> bound = std::nullopt);

struct GammaResult {
    long paths = 0;
    long violating_paths = 0;
    double worst_ratio = 0.0;  // max over paths and times of right / left
    nlohmann::json to_json() const;
};

/// exp(-2 int_0^t lambda) |f'(X_t)|^2 V1^2 >= |f'(X_t) J_t V1(x0)|^2 at every
/// mesh time and path, with relative slack 1e-6.
GammaResult gamma_pathwise_check(const SdeModel& model, const ScalarFunction& f,
                                 const LambdaFunction& lambda, const McConfig& cfg);

struct ErgodicCurve {
    std::vector<double> t, average, stderr_;
    std::optional<double> target;

    std::string to_csv() const;  // t,average,stderr[,gap]
    nlohmann::json to_json() const;
};

/// (1/t) int_0^t phi(Y_s) ds averaged over paths, for several observables
/// from one simulation. Targets, where given, fill the gap column.
std::vector<ErgodicCurve> ergodic_average(const SdeModel& model,
                                          const std::vector<ScalarFunction>& phis,
                                          const McConfig& cfg,
                                          const std::vector<std::optional<double>>& targets = {});

}  // namespace utweak
