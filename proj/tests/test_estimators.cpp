#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "utweak/estimators.hpp"

using namespace utweak;

namespace {

McConfig cfg(std::vector<double> x0, double delta, double horizon, long paths, int threads = 0) {
    McConfig c;
    c.x0 = std::move(x0);
    c.delta = delta;
    c.horizon = horizon;
    c.n_paths = paths;
    c.threads = threads;
    return c;
}

// Normalised trapezoid expectation on [lo, hi] with step h.
double trapezoid_mean(const std::function<double(double)>& density, const std::function<double(double)>& phi,
                      double lo, double hi, double h) {
    double z = 0.0, s = 0.0;
    const long n = std::lround((hi - lo) / h);
    for (long i = 0; i <= n; ++i) {
        const double x = lo + i * h, w = (i == 0 || i == n) ? 0.5 : 1.0;
        z += w * density(x);
        s += w * density(x) * phi(x);
    }
    return s / z;
}

// Frozen from trapezoid_mean with step 1e-4.
constexpr double kArctanSecondMoment = 1.8950036213629;
constexpr double kCubicSecondMoment = 0.4679199169737;

}  // namespace

TEST_CASE("step count") {
    CHECK(cfg({0}, 0.1, 1.0, 1).n_steps() == 10);
    CHECK(cfg({0}, 0.05, 6.0, 1).n_steps() == 120);
    CHECK_THROWS_AS(cfg({0}, 0.3, 1.0, 1).n_steps(), PreconditionError);
    CHECK_THROWS_AS(cfg({0}, 0.0, 1.0, 1).n_steps(), PreconditionError);
}

TEST_CASE("log-linear fit") {
    std::vector<double> t, y;
    for (int i = 0; i <= 50; ++i) {
        t.push_back(i * 0.2);
        y.push_back(3.0 * std::exp(-0.7 * i * 0.2));
    }
    const auto f = fit_log_linear(t, y);
    CHECK(f.rate == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.residual < 1e-12);
    CHECK(f.points == 51);
}

TEST_CASE("gaussian expectations") {
    CHECK(gaussian_expectation([](double x) { return x * x; }, 0.5, 2.0) == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(gaussian_expectation([](double x) { return std::cos(x); }, 0.3, 0.8) ==
          doctest::Approx(std::exp(-0.4) * std::cos(0.3)).epsilon(1e-12));
    CHECK(gaussian_expectation([](double x) { return x; }, 1.5, 0.0) == 1.5);
}

TEST_CASE("linear gaussian scheme in closed form") {
    const auto ou = builtin_example("ou").model;
    const double d = 0.1;
    const auto mv = linear_gaussian_euler(ou, 1.0, d, 50);
    REQUIRE(mv);
    double var = 0.0;
    for (int n = 0; n <= 50; ++n) {
        CHECK((*mv)[n].first == doctest::Approx(std::pow(1 - d, n)).epsilon(1e-13));
        CHECK((*mv)[n].second == doctest::Approx(var).epsilon(1e-13));
        var = (1 - d) * (1 - d) * var + 2 * d;
    }
    CHECK_FALSE(linear_gaussian_euler(builtin_example("arctan").model, 0.0, 0.1, 5));
}

TEST_CASE("exact weak error of the linear model") {
    const auto spec = builtin_example("ou");
    const auto phi = ScalarFunction::parse("x1", 1);
    const auto exact = *exact_observable_mean(spec, phi, {1.0});
    const double d = 0.1;
    const auto e = weak_error_exact(spec.model, phi, cfg({1.0}, d, 5.0, 1), exact);
    CHECK(e.reference == "closed_form");
    for (std::size_t i = 0; i < e.t.size(); ++i) {
        CHECK(e.estimate[i] == doctest::Approx(std::fabs(std::pow(1 - d, static_cast<double>(i)) - std::exp(-e.t[i])))
                                   .epsilon(1e-10));
        CHECK(e.stderr_[i] == 0.0);
    }
    CHECK_FALSE(e.divergent);
    CHECK(e.to_csv().rfind("t,estimate,stderr,sup_so_far\n", 0) == 0);

    // x^2: sup-over-mesh error halves with the step.
    const auto phi2 = ScalarFunction::parse("x1^2", 1);
    const auto exact2 = *exact_observable_mean(spec, phi2, {1.0});
    const double s1 = weak_error_exact(spec.model, phi2, cfg({1.0}, 0.1, 10.0, 1), exact2).sup();
    const double s2 = weak_error_exact(spec.model, phi2, cfg({1.0}, 0.05, 10.0, 1), exact2).sup();
    CHECK(s1 / s2 > 1.7);
    CHECK(s1 / s2 < 2.3);
}

TEST_CASE("simulated weak error flags divergence") {
    // The first Grusin coordinate is deterministic: e^t against (1 + d)^n.
    const auto spec = builtin_example("grusin");
    const auto phi = ScalarFunction::parse("x1", 2);
    const auto exact = *exact_observable_mean(spec, phi, spec.x0);
    const auto e = weak_error_exact(spec.model, phi, cfg(spec.x0, 0.1, 10.0, 16), exact);
    CHECK(e.reference == "exact");
    CHECK(e.growing);
    CHECK(e.divergent);
    CHECK(e.estimate.back() == doctest::Approx(std::exp(10.0) - std::pow(1.1, 100)).epsilon(1e-8));
}

TEST_CASE("fine reference weak error") {
    const auto spec = builtin_example("ou");
    const auto phi = ScalarFunction::parse("x1", 1);
    const auto curves = weak_error_fine(spec.model, phi, cfg({1.0}, 0.1, 2.0, 2000), {0.1, 0.05}, 16);
    REQUIRE(curves.size() == 2);
    CHECK(curves[0].reference == "fine");
    CHECK(curves[0].delta_ref == doctest::Approx(0.05 / 16));
    // The mean of x is linear, so the paired estimate matches the mesh
    // difference (1 - d)^n - (1 - d / m)^{n m} up to Monte Carlo error.
    for (const auto& c : curves) {
        const int m = static_cast<int>(std::lround(c.delta / c.delta_ref));
        for (std::size_t i = 1; i < c.t.size(); ++i) {
            const double expect = std::fabs(std::pow(1 - c.delta, static_cast<double>(i)) -
                                            std::pow(1 - c.delta_ref, static_cast<double>(i) * m));
            CHECK(std::fabs(c.estimate[i] - expect) <= 4 * c.stderr_[i] + 1e-12);
        }
    }
    // Same answer on any number of workers.
    const auto again = weak_error_fine(spec.model, phi, cfg({1.0}, 0.1, 2.0, 2000, 3), {0.1, 0.05}, 16);
    CHECK(again[1].estimate == curves[1].estimate);
    CHECK(again[1].stderr_ == curves[1].stderr_);
}

TEST_CASE("moment curves") {
    const auto ou = builtin_example("ou").model;
    const double d = 0.05;
    const auto m = moment_curve(ou, cfg({1.0}, d, 3.0, 4000), std::nullopt, 2.0);
    const auto mv = *linear_gaussian_euler(ou, 1.0, d, 60);
    for (std::size_t i = 0; i < m.t.size(); i += 5) {
        const double expect = mv[i].first * mv[i].first + mv[i].second;
        CHECK(std::fabs(m.mean[i] - expect) <= 4 * m.stderr_[i] + 1e-12);
    }
    CHECK(m.exploded == 0);
    CHECK(m.first_explosion_step == -1);

    const auto cubic = moment_curve(builtin_example("xcubed").model, cfg({4.0}, 1.0, 10.0, 50), std::nullopt, 2.0);
    CHECK(cubic.exploded == 50);
    CHECK(cubic.first_explosion_step <= 10);
}

TEST_CASE("decay functional of a constant") {
    const auto ou = builtin_example("ou").model;
    const auto d = decay_functional(ou, LambdaFunction::constant(0.3, 1), cfg({0.0}, 0.01, 4.0, 20));
    for (std::size_t i = 0; i < d.t.size(); ++i) CHECK(d.decay[i] == doctest::Approx(std::exp(-0.6 * d.t[i])).epsilon(1e-12));
    CHECK(d.fit.rate == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(d.singular_paths == 0);

    // Singular points are counted.
    const auto s = decay_functional(ou, LambdaFunction::expression("1/x1", 1), cfg({0.0}, 0.01, 1.0, 10));
    CHECK(s.singular_paths == 10);
}

TEST_CASE("derivative of the linear model") {
    const auto ou = builtin_example("ou").model;
    const auto d = derivative_estimate(ou, ScalarFunction::parse("x1", 1), VectorField::parse({"1"}, 1),
                                       cfg({0.5}, 0.01, 3.0, 50), DerivativeBound{1.0, 1.0, 1.0});
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        CHECK(d.estimate[i] == doctest::Approx(std::exp(-d.t[i])).epsilon(1e-12));
        CHECK(d.stderr_[i] < 1e-12);
    }
    CHECK(d.violations.empty());
    CHECK(d.fit.rate == doctest::Approx(1.0).epsilon(1e-9));

    // A bound that is too strong is reported.
    const auto tight = derivative_estimate(ou, ScalarFunction::parse("x1", 1), VectorField::parse({"1"}, 1),
                                           cfg({0.5}, 0.01, 3.0, 50), DerivativeBound{1.0, 2.0, 1.0});
    CHECK_FALSE(tight.violations.empty());
}

TEST_CASE("pathwise gamma inequality") {
    // Linear drift: lambda = 1 and J = e^{-t}, so both sides coincide.
    const auto ou = builtin_example("ou").model;
    const auto r = gamma_pathwise_check(ou, ScalarFunction::parse("tanh(x1)", 1), LambdaFunction::constant(1.0, 1),
                                        cfg({0.3}, 0.01, 2.0, 50));
    CHECK(r.violating_paths == 0);
    CHECK(r.worst_ratio == doctest::Approx(1.0).epsilon(1e-8));

    const auto spec = builtin_example("arctan");
    const auto a = gamma_pathwise_check(spec.model, ScalarFunction::parse("tanh(x1)", 1),
                                        LambdaFunction::from_model(spec.model), cfg({0.0}, 1e-3, 2.0, 50));
    CHECK(a.violating_paths == 0);

    // Overstating lambda breaks it.
    const auto bad = gamma_pathwise_check(spec.model, ScalarFunction::parse("tanh(x1)", 1),
                                          LambdaFunction::constant(2.0, 1), cfg({0.0}, 1e-3, 2.0, 20));
    CHECK(bad.violating_paths > 0);
}

TEST_CASE("invariant expectations") {
    const auto arctan = builtin_example("arctan");
    const double a = invariant_expectation(arctan, [](double x) { return x * x; });
    CHECK(a == doctest::Approx(kArctanSecondMoment).epsilon(1e-7));
    CHECK(trapezoid_mean([](double x) { return std::sqrt(1 + x * x) * std::exp(-x * std::atan(x)); },
                         [](double x) { return x * x; }, -40, 40, 1e-4) ==
          doctest::Approx(kArctanSecondMoment).epsilon(1e-7));
    CHECK(invariant_expectation(arctan, [](double x) { return std::tanh(x); }) == doctest::Approx(0.0).epsilon(1e-12));

    const auto cubic = builtin_example("xcubed");
    CHECK(invariant_expectation(cubic, [](double x) { return x * x; }) == doctest::Approx(kCubicSecondMoment).epsilon(1e-6));
    CHECK(trapezoid_mean([](double x) { return std::exp(-x * x * x * x / 4 - x * x / 2); },
                         [](double x) { return x * x; }, -10, 10, 1e-4) ==
          doctest::Approx(kCubicSecondMoment).epsilon(1e-6));

    CHECK(invariant_expectation(builtin_example("ou"), [](double x) { return x * x; }) == doctest::Approx(1.0));
    CHECK_THROWS_AS(invariant_expectation(builtin_example("grusin"), [](double) { return 1.0; }), UnsupportedError);
}

TEST_CASE("ergodic averages of the linear model") {
    const auto ou = builtin_example("ou").model;
    const auto c = ergodic_average(ou, {ScalarFunction::parse("x1^2", 1), ScalarFunction::parse("x1", 1)},
                                   cfg({0.0}, 0.01, 50.0, 200), {1.0, 0.0});
    REQUIRE(c.size() == 2);
    // Euler's stationary variance is 1 / (1 - d / 2).
    CHECK(std::fabs(c[0].average.back() - 1.0 / (1 - 0.005)) < 0.02 + 3 * c[0].stderr_.back());
    CHECK(std::fabs(c[1].average.back()) < 3 * c[1].stderr_.back() + 1e-3);
    CHECK(c[0].target == 1.0);
}
