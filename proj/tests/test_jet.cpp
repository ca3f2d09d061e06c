#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "utweak/jet.hpp"

using namespace utweak;
using J4 = Jet<4>;

namespace {

// k-th central difference of f at x with step h.
double central_fd(const std::function<double(double)>& f, double x, int k, double h) {
    switch (k) {
        case 0: return f(x);
        case 1: return (f(x + h) - f(x - h)) / (2 * h);
        case 2: return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
        case 3: return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
        default:
            return (f(x + 2 * h) - 4 * f(x + h) + 6 * f(x) - 4 * f(x - h) + f(x - 2 * h)) /
                   (h * h * h * h);
    }
}

struct Case {
    const char* name;
    std::function<J4(const J4&)> jet;
    std::function<double(double)> plain;
    double x;
};

}  // namespace

TEST_CASE("order-k coefficients match central differences") {
    const Case cases[] = {
        {"sin", [](const J4& a) { return sin(a); }, [](double v) { return std::sin(v); }, 0.7},
        {"cos", [](const J4& a) { return cos(a); }, [](double v) { return std::cos(v); }, -1.2},
        {"tan", [](const J4& a) { return tan(a); }, [](double v) { return std::tan(v); }, 0.4},
        {"atan", [](const J4& a) { return atan(a); }, [](double v) { return std::atan(v); }, 1.3},
        {"tanh", [](const J4& a) { return tanh(a); }, [](double v) { return std::tanh(v); }, 0.3},
        {"sinh", [](const J4& a) { return sinh(a); }, [](double v) { return std::sinh(v); }, 0.9},
        {"cosh", [](const J4& a) { return cosh(a); }, [](double v) { return std::cosh(v); }, -0.6},
        {"exp", [](const J4& a) { return exp(a); }, [](double v) { return std::exp(v); }, 0.2},
        {"log", [](const J4& a) { return log(a); }, [](double v) { return std::log(v); }, 1.7},
        {"sqrt", [](const J4& a) { return sqrt(a); }, [](double v) { return std::sqrt(v); }, 2.1},
        {"pow", [](const J4& a) { return pow(a, 2.5); },
         [](double v) { return std::pow(v, 2.5); }, 1.4},
        {"quotient", [](const J4& a) { return 1.0 / (a * a + 1.0); },
         [](double v) { return 1.0 / (v * v + 1.0); }, 0.5},
        {"powi", [](const J4& a) { return powi(a, -3); }, [](double v) { return 1 / (v * v * v); },
         1.1},
        {"composite", [](const J4& a) { return exp(sin(a)) * atan(a * a); },
         [](double v) { return std::exp(std::sin(v)) * std::atan(v * v); }, 0.8},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        const J4 r = c.jet(J4::variable(c.x));
        CHECK(r.value() == doctest::Approx(c.plain(c.x)).epsilon(1e-15));
        for (int k = 1; k <= 4; ++k) {
            CAPTURE(k);
            const double h = k <= 2 ? 1e-4 : 2e-3;
            const double fd = central_fd(c.plain, c.x, k, h);
            const double ad = r.derivative(k);
            CHECK(std::abs(ad - fd) <= std::max(1e-5, 1e-3 * std::abs(ad)));
        }
    }
}

TEST_CASE("order-0 part equals plain evaluation") {
    const double x = 0.37;
    const J4 r = tanh(x * J4::variable(x) + 2.0) / cosh(J4::variable(x));
    CHECK(r.value() == std::tanh(x * x + 2.0) / std::cosh(x));
}

TEST_CASE("product obeys the Leibniz rule") {
    const J4 a = sin(J4::variable(0.3));
    const J4 b = exp(J4::variable(0.3));
    const J4 p = a * b;
    for (int k = 0; k <= 4; ++k) {
        double s = 0.0;
        for (int j = 0; j <= k; ++j) s += a.coeff(j) * b.coeff(k - j);
        CHECK(p.coeff(k) == doctest::Approx(s).epsilon(1e-15));
    }
}

TEST_CASE("nested jets give mixed second derivatives") {
    // f(x, y) = sin(x) * y^2; d2f/dxdy = 2 y cos(x)
    using Inner = Jet<1>;
    using Outer = Jet<1, Inner>;
    const double x0 = 0.4, y0 = 1.5;
    const Outer x = Outer::variable(Inner(x0), Inner(1.0));
    const Outer y = Outer(Inner::variable(y0));
    const Outer f = sin(x) * y * y;
    CHECK(f.coeff(1).coeff(1) == doctest::Approx(2 * y0 * std::cos(x0)).epsilon(1e-14));
}

TEST_CASE("powi at zero stays exact") {
    const J4 r = powi(J4::variable(0.0), 3);
    CHECK(r.value() == 0.0);
    CHECK(r.derivative(3) == doctest::Approx(6.0));
    CHECK(r.derivative(4) == 0.0);
}
