#include "utweak/builtins.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace utweak {

namespace {

const std::string kRadius = "sqrt(x1^2+x2^2)";
const std::string kPsi = "(-smoothstep5(" + kRadius + ", 2, 3))";

std::vector<double> rotate(std::span<const double> x, double t) {
    return {x[0] * std::cos(t) - x[1] * std::sin(t), x[0] * std::sin(t) + x[1] * std::cos(t)};
}

void require_inside(std::span<const double> x0) {
    if (std::hypot(x0[0], x0[1]) >= 2.0)
        throw PreconditionError("the rotation solution needs |x0| < 2");
}

SdeModel additive_1d(const std::string& name, const std::string& drift) {
    return SdeModel::parse(name, 1, Convention::Ito, {drift}, {{"1"}});
}

ExampleSpec make_arctan() {
    ExampleSpec s{"arctan", "dX = -atan(X) dt + sqrt(2) dB, ergodic with derivative decay",
                  additive_1d("arctan", "-atan(x1)"), {}, {0.0}, {0.1, 0.05}, 10.0};
    s.lambda = "1/(1+x1^2)";
    s.oracle.density = InvariantDensity{
        [](double x) { return std::sqrt(1.0 + x * x) * std::exp(-x * std::atan(x)); }, -40.0, 40.0};
    s.constants = {{"reported_lambda0", 0.267}};
    return s;
}

ExampleSpec make_bump() {
    ExampleSpec s{"bump", "dX = (2 atan(X - 5) - X) dt + sqrt(2) dB, LOAC fails near x = 5",
                  additive_1d("bump", "2*atan(x1-5)-x1"), {}, {0.0}, {0.1, 0.05}, 10.0};
    s.lambda = "1-2/(1+(x1-5)^2)";
    s.oracle.density = InvariantDensity{
        [](double x) {
            const double u = x - 5.0;
            return std::exp(2.0 * (u * std::atan(u) - 0.5 * std::log1p(u * u)) - 0.5 * x * x);
        },
        -40.0, 40.0};
    return s;
}

ExampleSpec make_sincos() {
    ExampleSpec s{"sincos", "dX = -sin(X) dt + sqrt(2) cos(X) o dB, trapped in (-pi/2, pi/2)",
                  SdeModel::parse("sincos", 1, Convention::Stratonovich, {"-sin(x1)"}, {{"cos(x1)"}}),
                  {}, {0.0}, {0.01}, 10.0};
    s.lambda = "1/cos(x1)";
    return s;
}

ExampleSpec make_grusin() {
    ExampleSpec s{"grusin", "dX1 = X1 dt, dX2 = sqrt(2) X1 o dB: moments bounded, no uniform convergence",
                  SdeModel::parse("grusin", 2, Convention::Stratonovich, {"x1", "0"}, {{"0", "x1"}}),
                  {}, {1.0, 0.0}, {1e-3}, 10.0};
    s.oracle.mean = [](double t, std::span<const double> x) {
        return std::vector<double>{x[0] * std::exp(t), x[1]};
    };
    s.oracle.variance = [](double t, std::span<const double> x) {
        return std::vector<double>{0.0, x[0] * x[0] * std::expm1(2.0 * t)};
    };
    s.oracle.path = [](std::span<const double> x, double h, int n, std::span<const double> dB) {
        std::vector<double> out(static_cast<std::size_t>(n + 1) * 2);
        out[0] = x[0];
        out[1] = x[1];
        for (int k = 0; k < n; ++k) {
            out[2 * (k + 1)] = x[0] * std::exp((k + 1) * h);
            out[2 * (k + 1) + 1] =
                out[2 * k + 1] + std::numbers::sqrt2 * x[0] * std::exp((k + 0.5) * h) * dB[k];
        }
        return out;
    };
    return s;
}

ExampleSpec make_xcubed() {
    ExampleSpec s{"xcubed", "dX = (-X^3 - X) dt + sqrt(2) dB: Euler explodes for large steps",
                  additive_1d("xcubed", "-x1^3-x1"), {}, {4.0}, {0.01, 1.0}, 100.0};
    s.oracle.density = InvariantDensity{
        [](double x) { return std::exp(-0.25 * x * x * x * x - 0.5 * x * x); }, -10.0, 10.0};
    return s;
}

std::vector<std::string> circle_drift() {
    return {"-x2+" + kPsi + "*x1", "x1+" + kPsi + "*x2"};
}

ExactPathFn rotation_path() {
    return [](std::span<const double> x, double h, int n, std::span<const double>) {
        require_inside(x);
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(n + 1) * 2);
        for (int k = 0; k <= n; ++k) {
            const auto p = rotate(x, k * h);
            out.insert(out.end(), p.begin(), p.end());
        }
        return out;
    };
}

ExampleSpec make_circle() {
    ExampleSpec s{"circle", "rotation with confinement outside radius 3, no noise",
                  SdeModel::parse("circle", 2, Convention::Ito, circle_drift(), {}),
                  {}, {1.0, 0.0}, {0.05, 0.02, 0.01}, 100.0};
    s.oracle.mean = [](double t, std::span<const double> x) {
        require_inside(x);
        return rotate(x, t);
    };
    s.oracle.variance = [](double, std::span<const double>) { return std::vector<double>{0.0, 0.0}; };
    s.oracle.path = rotation_path();
    s.constants = {{"inner_radius", 2.0}, {"outer_radius", 3.0}};
    return s;
}

ExampleSpec make_circle_noise() {
    // Noise sqrt(2) * (1/sqrt(2)) 1{|x|>3} per coordinate, i.e. unit noise outside radius 3.
    const std::string g = "indicator(" + kRadius + "-3)/sqrt(2)";
    ExampleSpec s{"circle_noise", "confined rotation with noise switched on outside radius 3",
                  SdeModel::parse("circle_noise", 2, Convention::Ito, circle_drift(),
                                  {{g, "0"}, {"0", g}}),
                  {}, {1.0, 0.0}, {0.05, 0.02, 0.01}, 50.0};
    s.constants = {{"inner_radius", 2.0}, {"outer_radius", 3.0}};
    return s;
}

ExampleSpec make_ou() {
    ExampleSpec s{"ou", "dX = -X dt + sqrt(2) dB, exactly solvable control case",
                  additive_1d("ou", "-x1"), {}, {1.0}, {0.2, 0.1, 0.05}, 10.0};
    s.lambda = "1";
    s.oracle.gaussian = true;
    s.oracle.mean = [](double t, std::span<const double> x) {
        return std::vector<double>{x[0] * std::exp(-t)};
    };
    s.oracle.variance = [](double t, std::span<const double>) {
        return std::vector<double>{-std::expm1(-2.0 * t)};
    };
    s.oracle.path = [](std::span<const double> x, double h, int n, std::span<const double> dB) {
        std::vector<double> out(static_cast<std::size_t>(n) + 1);
        out[0] = x[0];
        const double decay = std::exp(-h), half = std::numbers::sqrt2 * std::exp(-0.5 * h);
        for (int k = 0; k < n; ++k) out[k + 1] = decay * out[k] + half * dB[k];
        return out;
    };
    s.oracle.density = InvariantDensity{[](double x) { return std::exp(-0.5 * x * x); }, -40.0, 40.0};
    return s;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names{"arctan", "bump",   "sincos",       "grusin",
                                                "xcubed", "circle", "circle_noise", "ou"};
    return names;
}

ExampleSpec builtin_example(const std::string& name) {
    if (name == "arctan") return make_arctan();
    if (name == "bump") return make_bump();
    if (name == "sincos") return make_sincos();
    if (name == "grusin") return make_grusin();
    if (name == "xcubed") return make_xcubed();
    if (name == "circle") return make_circle();
    if (name == "circle_noise") return make_circle_noise();
    if (name == "ou") return make_ou();
    throw Error(fmt::format("unknown builtin example '{}'", name));
}

double invariant_expectation(const ExampleSpec& spec, const std::function<double(double)>& phi) {
    if (!spec.oracle.density) throw UnsupportedError(spec.name + " has no invariant density");
    const auto& dens = *spec.oracle.density;
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double err_z = 0.0, err_n = 0.0;
    const double z = GK::integrate(dens.unnormalized, dens.lo, dens.hi, 20, 1e-14, &err_z);
    const double num = GK::integrate([&](double x) { return phi(x) * dens.unnormalized(x); },
                                     dens.lo, dens.hi, 20, 1e-14, &err_n);
    if (!(z > 0.0) || !std::isfinite(num)) throw QuadratureError("invariant density integral is not finite");
    const double value = num / z;
    const double err = err_n / z + std::abs(value) * err_z / z;
    if (!(err <= 1e-8))
        throw QuadratureError(fmt::format("quadrature error estimate {:.3g} exceeds 1e-8", err));
    return value;
}

}  // namespace utweak
