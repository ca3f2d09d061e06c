#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "utweak/builtins.hpp"
#include "utweak/euler.hpp"
#include "utweak/oracles.hpp"
#include "utweak/parallel.hpp"

using namespace utweak;

namespace {

std::vector<double> pt(std::initializer_list<double> v) { return v; }

SdeModel ou() { return SdeModel::parse("ou", 1, Convention::Ito, {"-x1"}, {{"1"}}); }
SdeModel arctan() { return builtin_example("arctan").model; }

double final_state(const SdeModel& m, double x0, double delta, int n, std::uint64_t path) {
    const EulerSimulator sim(m, delta, n);
    return sim.run(std::vector<double>{x0}, NoiseStream(kDefaultSeed), path).state(n)[0];
}

}  // namespace

TEST_CASE("single step by hand") {
    const auto m = ou();
    CHECK(euler_step(m, pt({1.0}), 0.1, pt({0.0}))[0] == doctest::Approx(0.9).epsilon(1e-15));
    // y + U0 delta + sqrt(2) V dB
    CHECK(euler_step(m, pt({1.0}), 0.1, pt({0.5}))[0] == doctest::Approx(0.9 + std::sqrt(2.0) * 0.5).epsilon(1e-15));

    // Stratonovich model: the step uses the Ito drift.
    const auto s = SdeModel::parse("s", 1, Convention::Stratonovich, {"-sin(x1)"}, {{"cos(x1)"}});
    const double x = 0.4, d = 0.01, db = -0.3;
    const double expect = x + (-std::sin(x) - std::sin(x) * std::cos(x)) * d + std::sqrt(2.0) * std::cos(x) * db;
    CHECK(euler_step(s, pt({x}), d, pt({db}))[0] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("increments with refinement 1 are scaled normals") {
    const NoiseStream noise(9);
    double out[3];
    brownian_increments(noise, 4, 17, 3, 0.04, 1, out);
    for (int k = 0; k < 3; ++k) CHECK(out[k] == 0.2 * noise.normal(4, 17, static_cast<std::uint32_t>(k)));
}

TEST_CASE("coarse increments sum the fine ones") {
    const NoiseStream noise(9);
    const double delta = 0.1;
    const int m = 8;
    for (std::uint32_t step = 0; step < 5; ++step) {
        double coarse[2], fine_sum[2] = {0, 0}, fine[2];
        brownian_increments(noise, 3, step, 2, delta, m, coarse);
        for (int j = 0; j < m; ++j) {
            brownian_increments(noise, 3, step * m + static_cast<std::uint32_t>(j), 2, delta / m, 1, fine);
            fine_sum[0] += fine[0];
            fine_sum[1] += fine[1];
        }
        CHECK(coarse[0] == doctest::Approx(fine_sum[0]).epsilon(1e-13));
        CHECK(coarse[1] == doctest::Approx(fine_sum[1]).epsilon(1e-13));
    }
}

TEST_CASE("run and run_with_increments agree") {
    const auto m = builtin_example("sincos").model;
    const int n = 200;
    const double delta = 0.01;
    const EulerSimulator sim(m, delta, n);
    const NoiseStream noise(77);
    std::vector<double> db(n);
    for (int s = 0; s < n; ++s) brownian_increments(noise, 5, static_cast<std::uint32_t>(s), 1, delta, 1, &db[s]);
    const auto a = sim.run(pt({0.3}), noise, 5);
    const auto b = sim.run_with_increments(pt({0.3}), db, 5);
    CHECK(a.states == b.states);
}

TEST_CASE("linear drift: the variation is e^{-t}") {
    SimOptions opt;
    opt.jacobian = true;
    const double delta = 1e-3;
    const int n = 3000;
    const auto model = ou();
    const EulerSimulator sim(model, delta, n, opt);
    const auto p = sim.run(pt({0.5}), NoiseStream(1), 0);
    for (int i = 0; i <= n; i += 100) CHECK(std::fabs(p.jac(i)[0] - std::exp(-i * delta)) < 1e-3);
}

TEST_CASE("variation against common-noise finite differences") {
    SimOptions opt;
    opt.jacobian = true;
    opt.higher_jacobians = true;
    const auto m = arctan();
    const double delta = 1e-4;
    const int n2 = 20000, n1 = 10000;
    const EulerSimulator sim(m, delta, n2, opt);
    for (std::uint64_t path = 0; path < 5; ++path) {
        const auto p = sim.run(pt({0.3}), NoiseStream(kDefaultSeed), path);
        // First variation at T = 2, h = 1e-4.
        const double h = 1e-4;
        const double fd1 = (final_state(m, 0.3 + h, delta, n2, path) - final_state(m, 0.3 - h, delta, n2, path)) / (2 * h);
        CHECK(std::fabs(p.jacobian[n2] - fd1) < 1e-3 * std::fabs(fd1));

        // Second variation at T = 1, h = 1e-3.
        const double g = 1e-3;
        const double up = final_state(m, 0.3 + g, delta, n1, path), mid = final_state(m, 0.3, delta, n1, path),
                     dn = final_state(m, 0.3 - g, delta, n1, path);
        const double fd2 = (up - 2 * mid + dn) / (g * g);
        const double scale = std::max(std::fabs(fd2), std::fabs(p.jacobian[n1]));
        CHECK(std::fabs(p.j2[n1] - fd2) < 1e-2 * scale);
    }
}

TEST_CASE("third variation is the x0-derivative of the second") {
    SimOptions opt;
    opt.jacobian = true;
    opt.higher_jacobians = true;
    const auto m = arctan();
    const double delta = 1e-4, h = 1e-3;
    const int n = 10000;
    const EulerSimulator sim(m, delta, n, opt);
    const NoiseStream noise(kDefaultSeed);
    for (std::uint64_t path = 0; path < 5; ++path) {
        const auto p = sim.run(pt({0.2}), noise, path);
        const auto up = sim.run(pt({0.2 + h}), noise, path);
        const auto dn = sim.run(pt({0.2 - h}), noise, path);
        const double fd3 = (up.j2[n] - dn.j2[n]) / (2 * h);
        const double scale = std::max({std::fabs(fd3), std::fabs(p.j2[n]), std::fabs(p.jacobian[n])});
        CHECK(std::fabs(p.j3[n] - fd3) < 2e-2 * scale);
    }
}

TEST_CASE("matrix variation of a multiplicative two-dimensional model") {
    const auto m = SdeModel::parse("m", 2, Convention::Stratonovich, {"-x1 + 0.5*sin(x2)", "-x2 + 0.3*x1"},
                                   {{"1 + 0.2*cos(x2)", "0.1*x1"}, {"0", "1"}});
    SimOptions opt;
    opt.jacobian = true;
    const double delta = 1e-3, h = 1e-6;
    const int n = 1000;
    const EulerSimulator sim(m, delta, n, opt);
    const EulerSimulator plain(m, delta, n);
    const NoiseStream noise(3);
    const std::vector<double> x0{0.4, -0.7};
    for (std::uint64_t path = 0; path < 3; ++path) {
        const auto p = sim.run(x0, noise, path);
        for (int c = 0; c < 2; ++c) {
            auto xp = x0, xm = x0;
            xp[c] += h;
            xm[c] -= h;
            const auto a = plain.run(xp, noise, path), b = plain.run(xm, noise, path);
            for (int r = 0; r < 2; ++r) {
                const double fd = (a.state(n)[r] - b.state(n)[r]) / (2 * h);
                CHECK(p.jac(n)[r * 2 + c] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
        // Small steps keep the flow orientation preserving.
        for (int i = 0; i <= n; i += 50) {
            const double* j = p.jac(i);
            CHECK(j[0] * j[3] - j[1] * j[2] > 0.0);
        }
    }
}

TEST_CASE("occupation of a constant is c t") {
    SimOptions opt;
    opt.occupation = [](const double*) { return std::optional<double>(0.7); };
    const auto model = ou();
    const EulerSimulator sim(model, 0.01, 500, opt);
    const auto p = sim.run(pt({1.0}), NoiseStream(2), 0);
    for (int i = 0; i <= 500; i += 25) CHECK(p.occupation[i] == doctest::Approx(0.7 * i * 0.01).epsilon(1e-12));
}

TEST_CASE("singular occupation stops the path") {
    SimOptions opt;
    opt.occupation = [](const double* x) { return x[0] > 0.0 ? std::optional<double>(1.0) : std::nullopt; };
    const auto model = ou();
    const EulerSimulator sim(model, 0.01, 10000, opt);
    const auto p = sim.run(pt({0.1}), NoiseStream(2), 0);
    CHECK(p.singular());
    CHECK(p.last_valid() < p.singular_at + 1);
}

TEST_CASE("explosion flag") {
    const auto m = builtin_example("xcubed").model;
    const EulerSimulator sim(m, 1.0, 20);
    const auto p = sim.run(pt({4.0}), NoiseStream(1), 0);
    CHECK(p.exploded());
    CHECK(p.exploded_at <= 10);
    const EulerSimulator fine(m, 0.01, 2000);
    CHECK_FALSE(fine.run(pt({4.0}), NoiseStream(1), 0).exploded());
}

TEST_CASE("results do not depend on the worker count") {
    const auto m = arctan();
    const auto a = simulate_batch(m, pt({0.0}), 0.05, 40, 600, 11, {}, 1);
    const auto b = simulate_batch(m, pt({0.0}), 0.05, 40, 600, 11, {}, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].states == b[i].states);
}

TEST_CASE("csv dump replays exactly") {
    SimOptions opt;
    opt.jacobian = true;
    const auto m = arctan();
    const auto paths = simulate_batch(m, pt({0.5}), 0.1, 20, 3, 5, opt, 1);
    const std::string csv = paths_to_csv(paths);
    CHECK(csv.rfind("t,path_id,x1,J11\n", 0) == 0);
    CHECK(paths_to_csv(simulate_batch(m, pt({0.5}), 0.1, 20, 3, 5, opt, 2)) == csv);

    // Parse back: every state is recovered bit for bit.
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::istringstream f(line);
        std::string t, id, x;
        std::getline(f, t, ',');
        std::getline(f, id, ',');
        std::getline(f, x, ',');
        const auto& p = paths[row / 21];
        CHECK(std::stod(x) == p.state(static_cast<int>(row % 21))[0]);
        CHECK(std::stoul(id) == p.path_id);
        ++row;
    }
    CHECK(row == 63);

    const auto meta = batch_metadata(m, pt({0.5}), 0.1, 20, 3, 5, opt);
    CHECK(meta["model_hash"] == m.hash());
    CHECK(meta["seed"] == 5);
}

TEST_CASE("coupled fine reference tracks the exact law") {
    const auto m = ou();
    const int n = 100;
    const auto pairs = coupled_reference(m, pt({1.0}), 1e-2, 16, n, 10000, kDefaultSeed);
    RunningStats fine, diff;
    for (const auto& p : pairs) {
        fine.add(p.fine.state(n * 16)[0]);
        diff.add(p.coarse.state(n)[0] - p.fine.state(n * 16)[0]);
    }
    CHECK(std::fabs(fine.mean - std::exp(-1.0)) < 3 * fine.stderr_mean());
    // Coupling: the pathwise difference is far smaller than either spread.
    CHECK(std::sqrt(diff.variance()) < 0.1 * std::sqrt(fine.variance()));
    CHECK_THROWS_AS(coupled_reference(m, pt({1.0}), 1e-2, 3, n, 1, 1), PreconditionError);
}

TEST_CASE("deterministic circle: fine path follows the rotation") {
    const auto spec = builtin_example("circle");
    const double delta = 0.01;
    const int n = 1000;
    const auto pair = coupled_reference(spec.model, spec.x0, delta, 64, n, 1, kDefaultSeed).front();
    const auto exact = circle_exact(10.0, spec.x0);
    const double* y = pair.fine.state(n * 64);
    CHECK(std::hypot(y[0] - exact[0], y[1] - exact[1]) < 1e-3);
    // The coarse path drifts outward along the radius recurrence.
    const auto rec = circle_radius_recurrence(delta, 1.0, n);
    const double* c = pair.coarse.state(n);
    CHECK(c[0] * c[0] + c[1] * c[1] == doctest::Approx(rec[n]).epsilon(1e-10));
}
