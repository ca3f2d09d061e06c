// utweak: simulate, check, estimate and reproduce from the command line.
//
// Exit codes: 0 success, 2 a verification check failed, 1 usage or IO error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>
#include <optional>

#include "utweak/builtins.hpp"
#include "utweak/conditions.hpp"
#include "utweak/estimators.hpp"
#include "utweak/io.hpp"
#include "utweak/oracles.hpp"
#include "utweak/parallel.hpp"
#include "utweak/reproduce.hpp"

using namespace utweak;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailed = 2;

struct Loaded {
    SdeModel model;
    std::optional<ExampleSpec> spec;
};

Loaded load_model(const std::string& src) {
    const std::string prefix = "builtin:";
    if (src.rfind(prefix, 0) == 0) {
        ExampleSpec s = builtin_example(src.substr(prefix.size()));
        SdeModel m = s.model;
        return {std::move(m), std::move(s)};
    }
    const auto j = parse_json(read_text(src), src);
    return {SdeModel::from_json(j, fs::path(src).stem().string()), std::nullopt};
}

// Options shared by the Monte Carlo subcommands.
struct Common {
    std::string model;
    std::vector<double> x0;
    double delta = 0.01;
    double horizon = 1.0;
    long paths = 1000;
    std::uint64_t seed = kDefaultSeed;
    std::string out = "out";
};

void add_model(CLI::App* sub, Common& c) {
    sub->add_option("--model", c.model, "builtin:NAME or a model JSON file")->required();
}

void add_mc(CLI::App* sub, Common& c) {
    add_model(sub, c);
    sub->add_option("--x0", c.x0, "initial point (default: the example's, else the origin)")->delimiter(',');
    sub->add_option("--delta", c.delta, "step size")->capture_default_str();
    sub->add_option("--T", c.horizon, "time horizon")->capture_default_str();
    sub->add_option("--paths", c.paths, "Monte Carlo paths")->capture_default_str();
    sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
}

McConfig make_config(const Common& c, const Loaded& l) {
    McConfig m;
    m.x0 = c.x0;
    if (m.x0.empty()) m.x0 = l.spec ? l.spec->x0 : std::vector<double>(static_cast<std::size_t>(l.model.dim()), 0.0);
    m.delta = c.delta;
    m.horizon = c.horizon;
    m.n_paths = c.paths;
    m.seed = c.seed;
    return m;
}

// Replayable record of the invocation: argv without --out/--threads.
std::vector<std::string> g_command;

nlohmann::json summary(const std::string& kind, const Loaded& l, const McConfig* cfg) {
    nlohmann::json j{{"schema_version", kSchemaVersion},
                     {"kind", kind},
                     {"command", g_command},
                     {"model", l.model.to_json()},
                     {"model_label", l.model.label()},
                     {"model_hash", l.model.hash()}};
    if (cfg) j["config"] = cfg->to_json();
    return j;
}

void finish(const fs::path& out, nlohmann::json j, const std::vector<std::string>& files) {
    j["files"] = files;
    write_json(out / "summary.json", j);
}

int cmd_simulate(const Common& c, bool jacobian, const std::string& occupation) {
    const Loaded l = load_model(c.model);
    const McConfig cfg = make_config(c, l);
    SimOptions opt;
    opt.jacobian = jacobian;
    std::optional<LambdaFunction> occ;
    if (!occupation.empty()) {
        occ = LambdaFunction::expression(occupation, l.model.dim());
        opt.occupation = occ->as_point_function();
    }
    const auto paths = simulate_batch(l.model, cfg.x0, cfg.delta, cfg.n_steps(), cfg.n_paths, cfg.seed, opt);
    const fs::path out(c.out);
    write_text(out / "paths.csv", paths_to_csv(paths));
    auto j = summary("simulate", l, &cfg);
    j["batch"] = batch_metadata(l.model, cfg.x0, cfg.delta, cfg.n_steps(), cfg.n_paths, cfg.seed, opt);
    long exploded = 0;
    for (const auto& p : paths) exploded += p.exploded();
    j["results"] = {{"exploded", exploded}};
    finish(out, j, {"paths.csv"});
    fmt::print("simulated {} paths of {} steps, {} exploded\n", cfg.n_paths, cfg.n_steps(), exploded);
    return kOk;
}

struct CheckArgs {
    std::optional<double> alpha;
    double lo = -60.0, hi = 60.0, step = 1e-2;
    std::string lyapunov;
    std::optional<double> lyapunov_c;
    std::optional<double> radius;
};

int cmd_check(const Common& c, const CheckArgs& a) {
    const Loaded l = load_model(c.model);
    const double alpha = a.alpha.value_or(l.spec ? l.spec->alpha : 0.5);
    const auto grid = linear_grid(a.lo, a.hi, a.step);
    const auto grid_nd = default_grid_nd(l.model.dim());
    ConditionReport rep = hypothesis_report(l.model, alpha, grid, grid_nd);
    std::vector<std::string> files{"report.json"};
    const fs::path out(c.out);
    std::vector<std::vector<double>> pts;
    if (l.model.dim() == 1)
        for (double x : grid) pts.push_back({x});
    else
        pts = grid_nd;
    if (!a.lyapunov.empty())
        rep.checks.push_back(lyapunov_check(l.model, ScalarFunction::parse(a.lyapunov, l.model.dim()), pts, a.lyapunov_c));
    if (a.radius) rep.checks.push_back(outward_drift_check(l.model, pts, *a.radius));
    if (l.model.dim() == 1 && l.model.noise_count() == 1 && l.model.additive()) {
        const auto lambda = LambdaFunction::from_model(l.model);
        write_text(out / "gap.csv", gap_csv(lambda, [&](double x) { return xi_function(l.model, alpha, x); }, grid));
        files.push_back("gap.csv");
    }
    write_json(out / "report.json", rep.to_json());
    auto j = summary("check", l, nullptr);
    j["config"] = {{"alpha", alpha}, {"grid", {{"lo", a.lo}, {"hi", a.hi}, {"step", a.step}}}};
    j["results"] = {{"passed", !rep.failed()}};
    finish(out, j, files);
    for (const auto& ch : rep.checks) fmt::print("{:<22} {:<13} {}\n", ch.name, to_string(ch.verdict), ch.value);
    if (const auto* d = rep.find("c_derivative_decay"); d && d->verdict != Verdict::Inapplicable)
        fmt::print("lambda0 = {}\n", d->value);
    return rep.failed() ? kFailed : kOk;
}

int cmd_weak_error(const Common& c, const std::string& phi_src, bool exact, int m) {
    const Loaded l = load_model(c.model);
    const McConfig cfg = make_config(c, l);
    const auto phi = ScalarFunction::parse(phi_src, l.model.dim());
    ErrorCurve curve;
    if (exact) {
        if (!l.spec) throw UnsupportedError("--exact needs a builtin example with an oracle");
        const auto mean = exact_observable_mean(*l.spec, phi, cfg.x0);
        if (!mean) throw UnsupportedError("the oracle has no exact mean for this observable");
        curve = weak_error_exact(l.model, phi, cfg, *mean);
    } else {
        curve = weak_error_fine(l.model, phi, cfg, {cfg.delta}, m).front();
    }
    const fs::path out(c.out);
    write_text(out / "weak_error.csv", curve.to_csv());
    auto j = summary("weak-error", l, &cfg);
    j["config"]["phi"] = phi.source();
    j["config"]["reference"] = exact ? "exact" : fmt::format("fine m={}", m);
    j["results"] = curve.to_json();
    finish(out, j, {"weak_error.csv"});
    fmt::print("sup error {} (stderr {}), reference {}{}\n", curve.sup(), curve.sup_stderr(), curve.reference,
               curve.divergent ? ", DIVERGENT" : "");
    return curve.divergent ? kFailed : kOk;
}

int cmd_decay(const Common& c, const std::string& lambda_src) {
    const Loaded l = load_model(c.model);
    const McConfig cfg = make_config(c, l);
    std::optional<LambdaFunction> lambda;
    if (!lambda_src.empty() && lambda_src != "loac")
        lambda = LambdaFunction::expression(lambda_src, l.model.dim());
    else if (lambda_src.empty() && l.spec && l.spec->lambda)
        lambda = LambdaFunction::expression(*l.spec->lambda, l.model.dim());
    else
        lambda = LambdaFunction::from_model(l.model);
    const DecayFit d = decay_functional(l.model, *lambda, cfg);
    const fs::path out(c.out);
    write_text(out / "decay.csv", d.to_csv());
    auto j = summary("decay", l, &cfg);
    j["config"]["lambda"] = lambda->description();
    j["results"] = d.to_json();
    finish(out, j, {"decay.csv"});
    fmt::print("fitted rate {} over the second half, {} singular paths\n", d.fit.rate, d.singular_paths);
    return kOk;
}

struct DerivArgs {
    std::string f;
    std::vector<std::string> direction;
    std::optional<double> lambda0;
    double u_x0 = 1.0, vf_norm = 1.0;
};

int cmd_derivative(const Common& c, const DerivArgs& a) {
    const Loaded l = load_model(c.model);
    const McConfig cfg = make_config(c, l);
    const int n = l.model.dim();
    std::vector<std::string> dir = a.direction;
    if (dir.empty()) {
        dir.assign(static_cast<std::size_t>(n), "0");
        dir[0] = "1";
    }
    std::optional<DerivativeBound> bound;
    if (a.lambda0) bound = DerivativeBound{a.u_x0, *a.lambda0, a.vf_norm};
    const auto d = derivative_estimate(l.model, ScalarFunction::parse(a.f, n), VectorField::parse(dir, n), cfg, bound);
    const fs::path out(c.out);
    write_text(out / "derivative.csv", d.to_csv());
    auto j = summary("derivative", l, &cfg);
    j["config"]["f"] = a.f;
    j["config"]["direction"] = dir;
    j["results"] = d.to_json();
    finish(out, j, {"derivative.csv"});
    fmt::print("fitted decay rate {}{}\n", d.fit.rate,
               bound ? fmt::format(", {} bound violations", d.violations.size()) : "");
    return bound && !d.violations.empty() ? kFailed : kOk;
}

int cmd_ergodic(const Common& c, const std::vector<std::string>& phis_src) {
    const Loaded l = load_model(c.model);
    const McConfig cfg = make_config(c, l);
    std::vector<ScalarFunction> phis;
    std::vector<std::optional<double>> targets;
    for (const auto& s : phis_src) {
        phis.push_back(ScalarFunction::parse(s, l.model.dim()));
        std::optional<double> t;
        if (l.spec && l.spec->oracle.density) {
            const auto& f = phis.back();
            t = invariant_expectation(*l.spec, [&](double x) { return f(&x); });
        }
        targets.push_back(t);
    }
    const auto curves = ergodic_average(l.model, phis, cfg, targets);
    const fs::path out(c.out);
    std::vector<std::string> files;
    nlohmann::json res = nlohmann::json::array();
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const std::string name = fmt::format("ergodic_{}.csv", k + 1);
        write_text(out / name, curves[k].to_csv());
        files.push_back(name);
        auto r = curves[k].to_json();
        r["phi"] = phis[k].source();
        res.push_back(r);
        fmt::print("{}: time average {} (stderr {}){}\n", phis[k].source(), curves[k].average.back(),
                   curves[k].stderr_.back(),
                   targets[k] ? fmt::format(", invariant mean {}", *targets[k]) : "");
    }
    auto j = summary("ergodic", l, &cfg);
    j["config"]["phi"] = phis_src;
    j["results"] = res;
    finish(out, j, files);
    return kOk;
}

int cmd_reproduce(const std::string& name, std::optional<double> delta, std::optional<long> paths,
                  std::uint64_t seed, const std::string& out) {
    ReproduceOptions o;
    o.delta = delta;
    o.paths = paths;
    o.seed = seed;
    o.out = out;
    auto res = reproduce(name, o);
    res.summary["command"] = g_command;
    write_json(fs::path(out) / "summary.json", res.summary);
    for (const auto& ch : res.summary["checks"])
        fmt::print("{:<34} {}\n", ch["name"].get<std::string>(), ch["passed"].get<bool>() ? "pass" : "FAIL");
    return res.passed ? kOk : kFailed;
}

int cmd_examples_list() {
    for (const auto& n : builtin_names()) {
        const auto s = builtin_example(n);
        fmt::print("{:<13} {}\n", n, s.description);
    }
    return kOk;
}

int cmd_examples_export(const std::string& name, const std::string& out) {
    const auto s = builtin_example(name);
    auto j = s.model.to_json();
    j["label"] = name;
    if (out.empty())
        fmt::print("{}\n", j.dump(2));
    else
        write_json(out, j);
    return kOk;
}

int run(int argc, char** argv);

int cmd_replay(const std::string& path, const std::string& out, int threads) {
    const auto j = parse_json(read_text(path), path);
    if (!j.contains("command") || !j["command"].is_array() || j["command"].empty())
        throw Error(path + ": no replayable command recorded");
    std::vector<std::string> args{"utweak"};
    for (const auto& a : j["command"]) args.push_back(a.get<std::string>());
    if (!out.empty()) {
        args.push_back("--out");
        args.push_back(out);
    }
    if (threads > 0) {
        args.push_back("--threads");
        args.push_back(std::to_string(threads));
    }
    std::vector<char*> ptrs;
    for (auto& a : args) ptrs.push_back(a.data());
    return run(static_cast<int>(ptrs.size()), ptrs.data());
}

int run(int argc, char** argv) {
    CLI::App app{"Euler scheme weak-error and derivative-decay toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: UTWEAK_THREADS or all cores)");

    Common c;
    bool jacobian = false;
    std::string occupation;
    auto* sim = app.add_subcommand("simulate", "simulate Euler paths and dump them as CSV");
    add_mc(sim, c);
    sim->add_flag("--jacobian", jacobian, "carry the first variation");
    sim->add_option("--occupation", occupation, "integrate this expression along each path");

    CheckArgs ca;
    auto* chk = app.add_subcommand("check", "verify the structural hypotheses and the gap criterion");
    add_model(chk, c);
    chk->add_option("--alpha", ca.alpha, "cosh(alpha x) scale");
    chk->add_option("--grid-lo", ca.lo)->capture_default_str();
    chk->add_option("--grid-hi", ca.hi)->capture_default_str();
    chk->add_option("--grid-step", ca.step)->capture_default_str();
    chk->add_option("--lyapunov", ca.lyapunov, "Lyapunov function G to test LG <= -cG + d");
    chk->add_option("--lyapunov-c", ca.lyapunov_c, "fixed c (default: scan)");
    chk->add_option("--radius", ca.radius, "check x.b(x) <= -|x|^2 outside this radius");

    std::string phi = "x1";
    bool exact = false;
    int m = 64;
    auto* we = app.add_subcommand("weak-error", "weak error curve against an exact or refined reference");
    add_mc(we, c);
    we->add_option("--phi", phi, "observable")->capture_default_str();
    we->add_flag("--exact", exact, "use the example's exact law");
    we->add_option("--m", m, "refinement of the coupled reference")->capture_default_str();

    std::string lambda_src;
    auto* dec = app.add_subcommand("decay", "E exp(-2 int lambda) with a log-linear fit");
    add_mc(dec, c);
    dec->add_option("--lambda", lambda_src, "lambda expression, or 'loac' for the induced one");

    DerivArgs da;
    auto* der = app.add_subcommand("derivative", "semigroup derivative along a direction field");
    add_mc(der, c);
    der->add_option("--f", da.f, "observable")->required();
    der->add_option("--direction", da.direction, "direction field components")->delimiter(';');
    der->add_option("--lambda0", da.lambda0, "check |estimate| <= u e^{-lambda0 t} |Vf|");
    der->add_option("--u-x0", da.u_x0)->capture_default_str();
    der->add_option("--vf-norm", da.vf_norm)->capture_default_str();

    std::vector<std::string> phis;
    auto* erg = app.add_subcommand("ergodic", "time averages and their gap to the invariant mean");
    add_mc(erg, c);
    erg->add_option("--phi", phis, "observable (repeatable)")->required();

    std::string rname;
    std::optional<double> rdelta;
    std::optional<long> rpaths;
    auto* rep = app.add_subcommand("reproduce", "scripted experiment for a builtin example");
    rep->add_option("name", rname, "example name")->required();
    rep->add_option("--delta", rdelta);
    rep->add_option("--paths", rpaths);
    rep->add_option("--seed", c.seed)->capture_default_str();

    std::string ename, eout;
    auto* ex = app.add_subcommand("examples", "list or export the builtin examples");
    ex->require_subcommand(1);
    auto* exl = ex->add_subcommand("list", "names and descriptions");
    auto* exe = ex->add_subcommand("export", "model JSON of one example");
    exe->add_option("name", ename)->required();
    exe->add_option("--out", eout, "file (default: standard output)");

    std::string rsum;
    auto* rpl = app.add_subcommand("replay", "re-run the command recorded in a summary.json");
    rpl->add_option("summary", rsum)->required();

    for (auto* s : {sim, chk, we, dec, der, erg, rep, rpl})
        s->add_option("--out", c.out, "output directory")->capture_default_str();
    for (auto* s : {sim, chk, we, dec, der, erg, rep, rpl}) s->add_option("--threads", threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    if (threads > 0) set_default_threads(threads);

    g_command.clear();
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--out" || a == "--threads") {
            ++i;
            continue;
        }
        if (a.rfind("--out=", 0) == 0 || a.rfind("--threads=", 0) == 0) continue;
        g_command.push_back(a);
    }

    if (*sim) return cmd_simulate(c, jacobian, occupation);
    if (*chk) return cmd_check(c, ca);
    if (*we) return cmd_weak_error(c, phi, exact, m);
    if (*dec) return cmd_decay(c, lambda_src);
    if (*der) return cmd_derivative(c, da);
    if (*erg) return cmd_ergodic(c, phis);
    if (*rep) return cmd_reproduce(rname, rdelta, rpaths, c.seed, c.out);
    if (*exl) return cmd_examples_list();
    if (*exe) return cmd_examples_export(ename, eout);
    if (*rpl) return cmd_replay(rsum, c.out == "out" ? "" : c.out, threads);
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
