#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "utweak/model.hpp"

using namespace utweak;

namespace {

std::vector<double> pt(std::initializer_list<double> v) { return v; }

void check_error_mentions(const nlohmann::json& j, const std::string& fragment) {
    try {
        SdeModel::from_json(j);
        FAIL("expected an error mentioning " << fragment);
    } catch (const Error& e) {
        CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
}

}  // namespace

TEST_CASE("stratonovich to ito by hand") {
    // U0 = -sin x + (cos x)' cos x = -sin x - sin x cos x
    const auto m = SdeModel::parse("sincos", 1, Convention::Stratonovich, {"-sin(x1)"}, {{"cos(x1)"}});
    for (double x : {-1.3, -0.2, 0.0, 0.7, 1.5}) {
        CHECK(m.ito_drift(pt({x}))[0] == doctest::Approx(-std::sin(x) - std::sin(x) * std::cos(x)).epsilon(1e-14));
        CHECK(m.stratonovich_drift(pt({x}))[0] == doctest::Approx(-std::sin(x)).epsilon(1e-14));
    }
    CHECK_FALSE(m.additive());
}

TEST_CASE("grusin correction vanishes") {
    const auto m = SdeModel::parse("grusin", 2, Convention::Stratonovich, {"x1", "0"}, {{"0", "x1"}});
    const auto u = m.ito_drift(pt({1.7, -3.0}));
    CHECK(u[0] == 1.7);
    CHECK(u[1] == 0.0);
}

TEST_CASE("drift round trip") {
    const auto v0 = VectorField::parse({"-sin(x1)"}, 1);
    const auto u0 = VectorField::parse({"-sin(x1) - sin(x1)*cos(x1)"}, 1);
    const std::vector<VectorField> diff{VectorField::parse({"cos(x1)"}, 1)};
    for (double x = -3.0; x <= 3.0; x += 0.25) {
        CHECK(std::fabs(ito_drift(v0, diff, pt({x}))[0] - u0(pt({x}))[0]) < 1e-12);
        CHECK(std::fabs(stratonovich_drift(u0, diff, pt({x}))[0] + std::sin(x)) < 1e-12);
    }
}

TEST_CASE("convention round trip on random polynomial fields") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(-1.0, 1.0), u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto poly = [&] {
            return fmt::format("{:.6f} + {:.6f}*x1 + {:.6f}*x2^2 + {:.6f}*x1*x2", c(rng), c(rng), c(rng), c(rng));
        };
        const std::vector<std::string> drift{poly(), poly()};
        const std::vector<std::vector<std::string>> diff{{poly(), poly()}, {poly(), poly()}};
        const auto strat = SdeModel::parse("s", 2, Convention::Stratonovich, drift, diff);
        for (int k = 0; k < 5; ++k) {
            const auto x = pt({u(rng), u(rng)});
            const auto ito = strat.ito_drift(x);
            const auto back = stratonovich_drift(VectorField::parse({fmt::format("{:.17g}", ito[0]), fmt::format("{:.17g}", ito[1])}, 2),
                                                 strat.diffusions(), x);
            const auto orig = strat.declared_drift()(x);
            CHECK(std::fabs(back[0] - orig[0]) < 1e-10);
            CHECK(std::fabs(back[1] - orig[1]) < 1e-10);
        }
    }
}

TEST_CASE("both conventions describe the same process") {
    // An Ito model declared with U0 and the Stratonovich model with V0 agree
    // on U0 and V0 at every probe.
    const auto strat = SdeModel::parse("s", 1, Convention::Stratonovich, {"-x1 + sin(x1)"}, {{"1 + 0.3*cos(x1)"}});
    const auto ito = SdeModel::parse("i", 1, Convention::Ito, {"-x1 + sin(x1) - 0.3*sin(x1)*(1 + 0.3*cos(x1))"},
                                     {{"1 + 0.3*cos(x1)"}});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const auto x = pt({u(rng)});
        REQUIRE(std::fabs(strat.ito_drift(x)[0] - ito.ito_drift(x)[0]) < 1e-12);
        REQUIRE(std::fabs(strat.stratonovich_drift(x)[0] - ito.stratonovich_drift(x)[0]) < 1e-12);
    }
}

TEST_CASE("json round trip keeps the hash") {
    const auto m = SdeModel::parse("g", 2, Convention::Stratonovich, {"x1", "0"}, {{"0", "x1"}});
    const auto j = m.to_json();
    CHECK(j["convention"] == "stratonovich");
    CHECK(j["noise"] == 1);
    const auto back = SdeModel::from_json(j);
    CHECK(back.hash() == m.hash());
    CHECK(back.to_json() == j);
    CHECK(m.hash().size() == 16);

    const auto other = SdeModel::parse("g", 2, Convention::Ito, {"x1", "0"}, {{"0", "x1"}});
    CHECK(other.hash() != m.hash());
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("json defaults") {
    const auto m = SdeModel::from_json(nlohmann::json::parse(R"({"dim":1,"drift":["-x1"],"diffusion":[["1"]]})"));
    CHECK(m.convention() == Convention::Ito);
    CHECK(m.noise_count() == 1);
    CHECK(m.additive());
    const auto noiseless = SdeModel::from_json(nlohmann::json::parse(R"({"dim":1,"drift":["-x1"],"diffusion":[]})"));
    CHECK(noiseless.noise_count() == 0);
}

TEST_CASE("json errors name the offending path") {
    using nlohmann::json;
    check_error_mentions(json::array(), "model JSON /");
    check_error_mentions(json::parse(R"({"drift":["x1"],"diffusion":[]})"), "/dim");
    check_error_mentions(json::parse(R"({"dim":0,"drift":[],"diffusion":[]})"), "/dim");
    check_error_mentions(json::parse(R"({"dim":1,"drift":["x1"],"diffusion":[],"convention":"levy"})"),
                         "/convention");
    check_error_mentions(json::parse(R"({"dim":1,"noise":2,"drift":["x1"],"diffusion":[["1"]]})"), "/noise");
    check_error_mentions(json::parse(R"({"dim":2,"drift":["x1"],"diffusion":[]})"), "/drift");
    check_error_mentions(json::parse(R"({"dim":1,"drift":["x1"],"diffusion":[["sin("]]})"), "/diffusion/0/0");
    check_error_mentions(json::parse(R"({"dim":1,"drift":[3],"diffusion":[]})"), "/drift/0");
    check_error_mentions(json::parse(R"({"dim":1,"drift":["x2"],"diffusion":[]})"), "/drift/0");
}
