#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "utweak/errors.hpp"
#include "utweak/oracles.hpp"

using namespace utweak;

TEST_CASE("grusin variances") {
    CHECK(grusin_variances(1.0, 1e-3, 1000).first == doctest::Approx(6.38905609893065).epsilon(1e-14));
    CHECK(grusin_variances(0.0, 1e-3, 0).first == 0.0);
    CHECK(grusin_variances(0.0, 1e-3, 0).second == 0.0);

    // Euler variance by direct recursion: X1 = (1 + d)^k, Var X2 += 2 d X1^2.
    for (double d : {0.1, 0.01, 1e-3}) {
        double x1 = 1.0, var = 0.0;
        for (int n = 1; n <= 2000; ++n) {
            var += 2 * d * x1 * x1;
            x1 *= 1 + d;
            if (n % 97 == 0) CHECK(grusin_variances(n * d, d, n).second == doctest::Approx(var).epsilon(1e-12));
        }
    }
    // The scheme underestimates and the gap widens with time.
    double prev = 0.0;
    for (int n = 100; n <= 10000; n += 100) {
        const auto [ex, eu] = grusin_variances(n * 1e-3, 1e-3, n);
        CHECK(eu < ex);
        CHECK(ex - eu > prev);
        prev = ex - eu;
    }
    CHECK_THROWS_AS(grusin_variances(-1.0, 0.1, 1), PreconditionError);
}

TEST_CASE("confinement factor") {
    CHECK(circle_psi(0.0) == 0.0);
    CHECK(circle_psi(1.99) == 0.0);
    CHECK(circle_psi(3.0) == -1.0);
    CHECK(circle_psi(10.0) == -1.0);
    CHECK(circle_psi(2.5) == doctest::Approx(-0.5));
    for (double r = 2.0; r < 3.0; r += 0.01) CHECK(circle_psi(r + 0.01) <= circle_psi(r));
}

TEST_CASE("circle rotation and radius recurrence") {
    const std::vector<double> x0{1.0, 0.0};
    const auto y = circle_exact(std::numbers::pi / 2, x0);
    CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(1.0));
    CHECK_THROWS_AS(circle_exact(1.0, std::vector<double>{2.5, 0.0}), PreconditionError);

    // Inside radius 2 the recurrence is (1 + d^2)^n.
    const auto r = circle_radius_recurrence(0.05, 1.0, 100);
    CHECK(r[100] == doctest::Approx(std::pow(1.0025, 100)).epsilon(1e-12));

    // It climbs past radius 2 and settles where (1 + psi d)^2 + d^2 = 1.
    const auto long_run = circle_radius_recurrence(0.05, 1.0, 10000);
    const double limit = std::sqrt(long_run.back());
    CHECK(limit > 2.0);
    CHECK(limit < 2.5);
    const double psi = circle_psi(limit);
    CHECK((1 + psi * 0.05) * (1 + psi * 0.05) + 0.0025 == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 1; i < long_run.size(); ++i) CHECK(long_run[i] >= long_run[i - 1] * (1 - 1e-12));

    for (double d : {0.05, 0.02, 0.01}) CHECK(circle_divergence(d, 10000) > 1.0);
    CHECK(circle_divergence(0.05, 10000) == doctest::Approx(long_run.back() - 1.0).epsilon(1e-9));
}

TEST_CASE("cubic threshold") {
    CHECK(xcubed_threshold(1.0) == 8.0);
    CHECK(xcubed_threshold(0.5) == 20.0);
}

TEST_CASE("cosh bound constants") {
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double d = 0.05, alpha = 1.3, beta = 1.0;
    const auto c = cosh_bound_constants(d, alpha, beta);
    CHECK(c.a == doctest::Approx(std::exp(d) * (1 - alpha * d + pi2 * d * d / 8)).epsilon(1e-15));
    CHECK(c.b == doctest::Approx(std::exp(d) * beta * d + std::exp(d) * pi2 / 8 * d * d * std::cosh(std::numbers::pi * d / 2))
                     .epsilon(1e-15));
    CHECK(c.bound(0.0) == doctest::Approx(1 + c.b / (1 - c.a)));
    CHECK(cosh_bound_constants(0.01, 1.2, 1.0).a < 1.0);
    CHECK_THROWS_AS(cosh_bound_constants(0.1, 0.01, 1.0), PreconditionError);
}

TEST_CASE("cosh beta is the grid maximum") {
    const double alpha = 1.3;
    double best = -INFINITY;
    for (int i = -30000; i <= 30000; ++i) {
        const double x = i * 1e-3;
        best = std::max(best, -std::atan(x) * std::sinh(x) + alpha * std::cosh(x));
    }
    const double beta = cosh_beta(alpha);
    CHECK(beta == doctest::Approx(best).epsilon(1e-12));
    // The defining inequality holds on a wider sample.
    for (double x = -25.0; x <= 25.0; x += 0.0137) CHECK(-std::atan(x) * std::sinh(x) <= beta - alpha * std::cosh(x) + 1e-9 * std::cosh(x));
    CHECK(kCoshAlpha > 1.0);
    CHECK(kCoshAlpha < std::numbers::pi / 2);
}
