#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string output;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(UTWEAK_CLI_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("utweak_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::vector<std::vector<double>> csv_rows(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream f(line);
        std::string cell;
        while (std::getline(f, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("examples list and export") {
    const auto r = run("examples list");
    CHECK(r.code == 0);
    for (const char* name : {"arctan", "bump", "sincos", "grusin", "xcubed", "circle", "circle_noise", "ou"})
        CHECK(r.output.find(name) != std::string::npos);

    const auto d = scratch("export");
    CHECK(run("examples export arctan --out " + (d / "arctan.json").string()).code == 0);
    const auto j = nlohmann::json::parse(slurp(d / "arctan.json"));
    CHECK(j["dim"] == 1);
    CHECK(j["drift"][0] == "-atan(x1)");

    // The exported file loads as a model.
    const auto s = run("simulate --model " + (d / "arctan.json").string() + " --paths 2 --T 1 --delta 0.1 --out " +
                       (d / "sim").string());
    CHECK(s.code == 0);
    CHECK(fs::exists(d / "sim" / "paths.csv"));
}

TEST_CASE("check passes for arctan and fails for grusin") {
    const auto d = scratch("check");
    const auto r = run("check --model builtin:arctan --alpha 0.5 --out " + d.string());
    CHECK(r.code == 0);
    const auto rep = nlohmann::json::parse(slurp(d / "report.json"));
    CHECK(rep["passed"] == true);
    double lambda0 = 0.0;
    for (const auto& c : rep["checks"])
        if (c["name"] == "c_derivative_decay") lambda0 = c["value"].get<double>();
    CHECK(lambda0 > 0.0);
    const auto gap = csv_rows(slurp(d / "gap.csv"));
    REQUIRE(gap.size() > 1000);
    for (const auto& row : gap) CHECK(row[3] > 0.0);

    const auto g = run("check --model builtin:grusin --out " + (d / "g").string());
    CHECK(g.code == 2);
}

TEST_CASE("exact weak error matches the closed form") {
    const auto d = scratch("weak");
    const auto r = run("weak-error --model builtin:ou --phi \"x1^2\" --delta 0.1 --T 10 --exact --out " + d.string());
    CHECK(r.code == 0);
    // E X_t^2 = 1 from x0 = 1; the scheme has mean 0.9^n and variance
    // v' = 0.81 v + 0.2.
    double m = 1.0, v = 0.0, sup = 0.0;
    for (int n = 0; n <= 100; ++n) {
        sup = std::max(sup, std::fabs(m * m + v - 1.0));
        m *= 0.9;
        v = 0.81 * v + 0.2;
    }
    const auto rows = csv_rows(slurp(d / "weak_error.csv"));
    REQUIRE(rows.size() == 101);
    CHECK(rows.back()[3] == doctest::Approx(sup).epsilon(1e-10));
    const auto s = nlohmann::json::parse(slurp(d / "summary.json"));
    CHECK(s["schema_version"] == 1);
    CHECK(s["kind"] == "weak-error");
}

TEST_CASE("replay reproduces the output") {
    const auto d = scratch("replay");
    CHECK(run("simulate --model builtin:sincos --paths 20 --T 1 --delta 0.01 --seed 9 --jacobian --out " +
              (d / "a").string())
              .code == 0);
    CHECK(run("replay " + (d / "a" / "summary.json").string() + " --out " + (d / "b").string()).code == 0);
    CHECK(slurp(d / "a" / "paths.csv") == slurp(d / "b" / "paths.csv"));
    CHECK(slurp(d / "a" / "paths.csv").rfind("t,path_id,x1,J11\n", 0) == 0);
}

TEST_CASE("thread count does not change results") {
    const auto d = scratch("threads");
    CHECK(run("--threads 1 simulate --model builtin:arctan --paths 600 --T 1 --delta 0.05 --out " + (d / "one").string())
              .code == 0);
    CHECK(run("simulate --model builtin:arctan --paths 600 --T 1 --delta 0.05 --threads 3 --out " + (d / "three").string())
              .code == 0);
    CHECK(slurp(d / "one" / "paths.csv") == slurp(d / "three" / "paths.csv"));
    setenv("UTWEAK_THREADS", "2", 1);
    const auto r = run("simulate --model builtin:arctan --paths 600 --T 1 --delta 0.05 --out " + (d / "env").string());
    unsetenv("UTWEAK_THREADS");
    CHECK(r.code == 0);
    CHECK(slurp(d / "one" / "paths.csv") == slurp(d / "env" / "paths.csv"));
}

TEST_CASE("derivative bound violations exit with 2") {
    const auto d = scratch("deriv");
    CHECK(run("derivative --model builtin:ou --f x1 --lambda0 1 --paths 20 --T 2 --delta 0.01 --out " + d.string()).code ==
          0);
    CHECK(run("derivative --model builtin:ou --f x1 --lambda0 3 --paths 20 --T 2 --delta 0.01 --out " + d.string()).code ==
          2);
}

TEST_CASE("reproduce writes a passing summary") {
    const auto d = scratch("reproduce");
    const auto r = run("reproduce ou --out " + d.string());
    CHECK(r.code == 0);
    const auto s = nlohmann::json::parse(slurp(d / "summary.json"));
    CHECK(s["passed"] == true);
    CHECK(s["example"] == "ou");
    for (const auto& f : s["files"]) CHECK(fs::exists(d / f.get<std::string>()));
}

TEST_CASE("usage and input errors exit with 1") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("simulate").code == 1);
    CHECK(run("simulate --model builtin:nonesuch").code == 1);
    const auto missing = run("simulate --model /nonexistent/model.json");
    CHECK(missing.code == 1);
    CHECK(missing.output.find("cannot read") != std::string::npos);

    const auto d = scratch("bad");
    std::ofstream(d / "bad.json") << "{\n  \"dim\": 1,\n  \"drift\": [\"x1\"\n}";
    const auto bad = run("simulate --model " + (d / "bad.json").string());
    CHECK(bad.code == 1);
    CHECK(bad.output.find("line 4") != std::string::npos);

    std::ofstream(d / "typo.json") << R"({"dim": 1, "drift": ["-x1 +"], "diffusion": [["1"]]})";
    const auto typo = run("simulate --model " + (d / "typo.json").string());
    CHECK(typo.code == 1);
    CHECK(typo.output.find("/drift/0") != std::string::npos);

    CHECK(run("simulate --model builtin:ou --delta 0.3 --T 1").code == 1);
}
