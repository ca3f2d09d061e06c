#include "utweak/estimators.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "utweak/parallel.hpp"

namespace utweak {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-block accumulator: several per-time series plus a few counters.
struct Acc {
    std::vector<std::vector<RunningStats>> s;
    long count_a = 0;
    long count_b = 0;
    int first = -1;
    double worst = 0.0;

    Acc(int series, int times)
        : s(static_cast<std::size_t>(series), std::vector<RunningStats>(static_cast<std::size_t>(times))) {}

    void merge(const Acc& o) {
        for (std::size_t k = 0; k < s.size(); ++k)
            for (std::size_t i = 0; i < s[k].size(); ++i) s[k][i].merge(o.s[k][i]);
        count_a += o.count_a;
        count_b += o.count_b;
        if (o.first >= 0 && (first < 0 || o.first < first)) first = o.first;
        worst = std::max(worst, o.worst);
    }
};

template <class Body>
Acc accumulate(long n_paths, int series, int times, int threads, const Body& body) {
    if (n_paths < 1) throw PreconditionError("at least one path is needed");
    auto blocks = run_blocks<Acc>(
        n_paths, [&] { return Acc(series, times); }, [&](Acc& a, long p) { body(a, p); }, threads);
    Acc total(series, times);
    for (const auto& b : blocks) total.merge(b);
    return total;
}

double eval_at(const ScalarFunction& f, const double* x) { return f(x); }

void check_x0(const SdeModel& model, const McConfig& cfg) {
    if (static_cast<int>(cfg.x0.size()) != model.dim())
        throw DimensionError(fmt::format("x0 has {} entries, the model has dimension {}", cfg.x0.size(),
                                         model.dim()));
}

void check_observable(const SdeModel& model, const ScalarFunction& f) {
    if (f.dim() != model.dim()) throw DimensionError("observable dimension differs from the model");
}

}  // namespace

int McConfig::n_steps() const {
    if (!(delta > 0.0) || !(horizon >= 0.0)) throw PreconditionError("need delta > 0 and horizon >= 0");
    const double r = horizon / delta;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 * std::max(1.0, r))
        throw PreconditionError(fmt::format("horizon {} is not a whole number of steps {}", horizon, delta));
    if (n > 2e9) throw PreconditionError("too many steps");
    return static_cast<int>(n);
}

nlohmann::json McConfig::to_json() const {
    return {{"x0", x0}, {"delta", delta}, {"horizon", horizon}, {"n_paths", n_paths}, {"seed", seed}};
}

LogLinearFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& y) {
    LogLinearFit f;
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < t.size() && i < y.size(); ++i)
        if (y[i] > 0.0 && std::isfinite(y[i])) pts.emplace_back(t[i], std::log(y[i]));
    f.points = static_cast<int>(pts.size());
    if (pts.size() < 2) return f;
    for (auto [a, b] : pts) {
        st += a;
        sy += b;
        stt += a * a;
        sty += a * b;
    }
    const double n = static_cast<double>(pts.size());
    const double den = n * stt - st * st;
    if (den == 0.0) return f;
    const double slope = (n * sty - st * sy) / den;
    f.rate = -slope;
    f.intercept = (sy - slope * st) / n;
    double r2 = 0.0;
    for (auto [a, b] : pts) {
        const double e = b - (f.intercept + slope * a);
        r2 += e * e;
    }
    f.residual = std::sqrt(r2 / n);
    return f;
}

namespace {
nlohmann::json fit_json(const LogLinearFit& f) {
    return {{"rate", f.rate}, {"intercept", f.intercept}, {"residual", f.residual}, {"points", f.points}};
}

// Second half of a time grid.
LogLinearFit tail_fit(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.empty()) return {};
    const double half = 0.5 * t.back();
    std::vector<double> tt, yy;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= half) {
            tt.push_back(t[i]);
            yy.push_back(y[i]);
        }
    return fit_log_linear(tt, yy);
}
}  // namespace

double gaussian_expectation(const std::function<double(double)>& phi, double mean, double variance) {
    if (!(variance >= 0.0)) throw PreconditionError("variance must be non-negative");
    if (variance == 0.0) return phi(mean);
    const double s = std::sqrt(variance);
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    return GK::integrate([&](double z) { return phi(mean + s * z) * c * std::exp(-0.5 * z * z); },
                         -12.0, 12.0, 15, 1e-15);
}

std::optional<std::vector<std::pair<double, double>>> linear_gaussian_euler(const SdeModel& model,
                                                                           double x0, double delta,
                                                                           int n_steps) {
    if (model.dim() != 1 || !model.additive()) return std::nullopt;
    double slope = 0.0, offset = 0.0;
    {
        const Jet<2> z = Jet<2>::variable(0.0);
        Jet<2> b;
        model.ito_drift(&z, &b);
        offset = b.value();
        slope = b.coeff(1);
    }
    for (double p : {-7.0, -2.0, -0.5, 0.3, 1.0, 4.0, 11.0}) {
        const Jet<2> z = Jet<2>::variable(p);
        Jet<2> b;
        model.ito_drift(&z, &b);
        if (b.coeff(2) != 0.0 || std::abs(b.value() - (offset + slope * p)) > 1e-12 * (1.0 + std::abs(b.value())))
            return std::nullopt;
    }
    double s = 0.0;
    for (const auto& v : model.diffusions()) {
        double c = 0.0;
        const double origin = 0.0;
        v(&origin, &c);
        s += c * c;
    }
    std::vector<std::pair<double, double>> out{{x0, 0.0}};
    double m = x0, var = 0.0;
    const double f = 1.0 + delta * slope;
    for (int n = 0; n < n_steps; ++n) {
        m = m + delta * (slope * m + offset);
        var = f * f * var + 2.0 * delta * s;
        out.emplace_back(m, var);
    }
    return out;
}

std::optional<std::function<double(double)>> exact_observable_mean(const ExampleSpec& spec,
                                                                   const ScalarFunction& phi,
                                                                   std::vector<double> x0) {
    const auto& o = spec.oracle;
    if (!o.mean) return std::nullopt;
    if (o.gaussian && spec.model.dim() == 1 && o.variance) {
        auto f = std::make_shared<ScalarFunction>(phi);
        return [o, f, x0](double t) {
            const double m = o.mean(t, x0)[0], v = o.variance(t, x0)[0];
            return gaussian_expectation([&](double x) { return (*f)(&x); }, m, v);
        };
    }
    const auto mono = phi.expr().as_monomial();
    if (!mono) return std::nullopt;
    const auto [index, power] = *mono;
    if (power == 1) return [o, x0, i = index](double t) { return o.mean(t, x0)[static_cast<std::size_t>(i)]; };
    if (power == 2 && o.variance)
        return [o, x0, i = index](double t) {
            const double m = o.mean(t, x0)[static_cast<std::size_t>(i)];
            return o.variance(t, x0)[static_cast<std::size_t>(i)] + m * m;
        };
    return std::nullopt;
}

// --- error curves -----------------------------------------------------------------

double ErrorCurve::sup() const { return sup_so_far.empty() ? kNaN : sup_so_far.back(); }

double ErrorCurve::sup_stderr() const {
    if (estimate.empty()) return kNaN;
    std::size_t at = 0;
    for (std::size_t i = 1; i < estimate.size(); ++i)
        if (estimate[i] > estimate[at]) at = i;
    return stderr_[at];
}

std::string ErrorCurve::to_csv() const {
    std::string out = "t,estimate,stderr,sup_so_far\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        fmt::format_to(std::back_inserter(out), "{},{},{},{}\n", t[i], estimate[i], stderr_[i], sup_so_far[i]);
    return out;
}

nlohmann::json ErrorCurve::to_json() const {
    return {{"delta", delta},       {"delta_ref", delta_ref}, {"n_paths", n_paths},
            {"seed", seed},         {"reference", reference}, {"sup", sup()},
            {"sup_stderr", sup_stderr()}, {"exploded", exploded}, {"growing", growing},
            {"divergent", divergent}};
}

namespace {

void finish_curve(ErrorCurve& c) {
    c.sup_so_far.resize(c.estimate.size());
    double run = 0.0;
    for (std::size_t i = 0; i < c.estimate.size(); ++i) {
        if (std::isfinite(c.estimate[i])) run = std::max(run, c.estimate[i]);
        c.sup_so_far[i] = run;
    }
    const std::size_t n = c.estimate.size();
    if (n >= 8) {
        double first = 0.0;
        for (std::size_t i = 0; i <= n / 2; ++i)
            if (std::isfinite(c.estimate[i])) first = std::max(first, c.estimate[i]);
        const double last = c.estimate[n - 1];
        c.growing = std::isfinite(last) && last > 2.0 * first + 3.0 * c.stderr_[n - 1] && last > 1e-12;
    }
    c.divergent = c.growing || 2 * c.exploded > c.n_paths;
}

}  // namespace

ErrorCurve weak_error_exact(const SdeModel& model, const ScalarFunction& phi, const McConfig& cfg,
                            const std::function<double(double)>& exact) {
    check_x0(model, cfg);
    check_observable(model, phi);
    const int n = cfg.n_steps();
    ErrorCurve c;
    c.delta = cfg.delta;
    c.n_paths = cfg.n_paths;
    c.seed = cfg.seed;
    for (int i = 0; i <= n; ++i) c.t.push_back(i * cfg.delta);

    if (auto lin = linear_gaussian_euler(model, cfg.x0[0], cfg.delta, n)) {
        c.reference = "closed_form";
        c.n_paths = 0;
        for (int i = 0; i <= n; ++i) {
            const auto [m, v] = (*lin)[static_cast<std::size_t>(i)];
            c.scheme_mean.push_back(gaussian_expectation([&](double x) { return phi(&x); }, m, v));
            c.stderr_.push_back(0.0);
        }
    } else {
        c.reference = "exact";
        const EulerSimulator sim(model, cfg.delta, n);
        const NoiseStream noise(cfg.seed);
        const Acc acc = accumulate(cfg.n_paths, 1, n + 1, cfg.threads, [&](Acc& a, long p) {
            const MeshPath path = sim.run(cfg.x0, noise, static_cast<std::uint64_t>(p));
            if (path.exploded()) ++a.count_a;
            const int last = path.last_valid();
            for (int i = 0; i <= last; ++i) a.s[0][static_cast<std::size_t>(i)].add(eval_at(phi, path.state(i)));
        });
        c.exploded = acc.count_a;
        for (const auto& s : acc.s[0]) {
            c.scheme_mean.push_back(s.n > 0 ? s.mean : kNaN);
            c.stderr_.push_back(s.stderr_mean());
        }
    }
    for (int i = 0; i <= n; ++i) {
        c.reference_mean.push_back(exact(c.t[static_cast<std::size_t>(i)]));
        c.estimate.push_back(std::abs(c.reference_mean.back() - c.scheme_mean[static_cast<std::size_t>(i)]));
    }
    finish_curve(c);
    return c;
}

std::vector<ErrorCurve> weak_error_fine(const SdeModel& model, const ScalarFunction& phi,
                                        const McConfig& cfg, const std::vector<double>& deltas, int m) {
    check_x0(model, cfg);
    check_observable(model, phi);
    if (deltas.empty()) throw PreconditionError("at least one coarse step is needed");
    if (m < 1 || (m & (m - 1)) != 0) throw PreconditionError("refinement m must be a power of 2");
    const double h = *std::min_element(deltas.begin(), deltas.end()) / m;
    McConfig fine_cfg = cfg;
    fine_cfg.delta = h;
    const int n_fine = fine_cfg.n_steps();
    std::vector<int> ratio, n_coarse;
    for (double d : deltas) {
        const double r = d / h;
        if (std::abs(r - std::round(r)) > 1e-9 * r)
            throw PreconditionError(fmt::format("step {} is not a multiple of the reference step {}", d, h));
        ratio.push_back(static_cast<int>(std::round(r)));
        if (n_fine % ratio.back() != 0)
            throw PreconditionError(fmt::format("horizon is not a whole number of steps {}", d));
        n_coarse.push_back(n_fine / ratio.back());
    }
    const int nd = model.noise_count();
    const EulerSimulator fine(model, h, n_fine);
    std::vector<EulerSimulator> coarse;
    for (std::size_t j = 0; j < deltas.size(); ++j) coarse.emplace_back(model, deltas[j], n_coarse[j]);
    const NoiseStream noise(cfg.seed);
    const int n_times = *std::max_element(n_coarse.begin(), n_coarse.end()) + 1;
    const int series = 3 * static_cast<int>(deltas.size());

    // Series 3j..3j+2 hold difference, coarse and fine values; series 3J+j counts explosions.
    const Acc acc = accumulate(cfg.n_paths, series + static_cast<int>(deltas.size()), n_times, cfg.threads,
                               [&](Acc& a, long p) {
        const auto id = static_cast<std::uint64_t>(p);
        std::vector<double> dB(static_cast<std::size_t>(n_fine) * nd);
        const double sh = std::sqrt(h);
        for (int s = 0; s < n_fine; ++s) {
            double* row = dB.data() + static_cast<std::size_t>(s) * nd;
            noise.normals(id, static_cast<std::uint32_t>(s), nd, row);
            for (int k = 0; k < nd; ++k) row[k] *= sh;
        }
        const MeshPath f = fine.run_with_increments(cfg.x0, dB, id);
        const int f_last = f.last_valid();
        for (std::size_t j = 0; j < deltas.size(); ++j) {
            const int r = ratio[j], nc = n_coarse[j];
            std::vector<double> cdB(static_cast<std::size_t>(nc) * nd, 0.0);
            for (int s = 0; s < n_fine; ++s)
                for (int k = 0; k < nd; ++k)
                    cdB[static_cast<std::size_t>(s / r) * nd + k] += dB[static_cast<std::size_t>(s) * nd + k];
            const MeshPath c = coarse[j].run_with_increments(cfg.x0, cdB, id);
            const int last = std::min(c.last_valid(), f_last / r);
            if (last < nc) a.s[series + j][0].add(1.0);  // explosion marker
            for (int i = 0; i <= last; ++i) {
                const double yc = eval_at(phi, c.state(i)), yf = eval_at(phi, f.state(i * r));
                a.s[3 * j][static_cast<std::size_t>(i)].add(yf - yc);
                a.s[3 * j + 1][static_cast<std::size_t>(i)].add(yc);
                a.s[3 * j + 2][static_cast<std::size_t>(i)].add(yf);
            }
        }
    });
    std::vector<ErrorCurve> out;
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        ErrorCurve c;
        c.delta = deltas[j];
        c.delta_ref = h;
        c.n_paths = cfg.n_paths;
        c.seed = cfg.seed;
        c.reference = "fine";
        c.exploded = static_cast<long>(acc.s[series + j][0].n);
        for (int i = 0; i <= n_coarse[j]; ++i) {
            const auto& d = acc.s[3 * j][static_cast<std::size_t>(i)];
            c.t.push_back(i * deltas[j]);
            c.estimate.push_back(d.n > 0 ? std::abs(d.mean) : kNaN);
            c.stderr_.push_back(d.stderr_mean());
            c.scheme_mean.push_back(acc.s[3 * j + 1][static_cast<std::size_t>(i)].mean);
            c.reference_mean.push_back(acc.s[3 * j + 2][static_cast<std::size_t>(i)].mean);
        }
        finish_curve(c);
        out.push_back(std::move(c));
    }
    return out;
}

// --- moments ----------------------------------------------------------------------

std::string MomentCurve::to_csv() const {
    std::string out = "t,estimate,stderr,sup_so_far\n";
    double run = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::isfinite(mean[i])) run = std::max(run, mean[i]);
        fmt::format_to(std::back_inserter(out), "{},{},{},{}\n", t[i], mean[i], stderr_[i], run);
    }
    return out;
}

nlohmann::json MomentCurve::to_json() const {
    return {{"sup", sup},           {"sup_stderr", sup_stderr}, {"sup_time", sup_time},
            {"exploded", exploded}, {"first_explosion_step", first_explosion_step}};
}

MomentCurve moment_curve(const SdeModel& model, const McConfig& cfg,
                         const std::optional<ScalarFunction>& weight, double power) {
    check_x0(model, cfg);
    if (weight) check_observable(model, *weight);
    const int n = cfg.n_steps();
    const int dim = model.dim();
    const EulerSimulator sim(model, cfg.delta, n);
    const NoiseStream noise(cfg.seed);
    const Acc acc = accumulate(cfg.n_paths, 1, n + 1, cfg.threads, [&](Acc& a, long p) {
        const MeshPath path = sim.run(cfg.x0, noise, static_cast<std::uint64_t>(p));
        if (path.exploded()) {
            ++a.count_a;
            if (a.first < 0 || path.exploded_at < a.first) a.first = path.exploded_at;
        }
        const int last = path.last_valid();
        for (int i = 0; i <= last; ++i) {
            const double* y = path.state(i);
            double v = 1.0;
            if (power != 0.0) {
                double r2 = 0.0;
                for (int k = 0; k < dim; ++k) r2 += y[k] * y[k];
                v = std::pow(r2, 0.5 * power);
            }
            if (weight) v *= eval_at(*weight, y);
            a.s[0][static_cast<std::size_t>(i)].add(v);
        }
    });
    MomentCurve c;
    c.exploded = acc.count_a;
    c.first_explosion_step = acc.first;
    c.sup = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
        const auto& s = acc.s[0][static_cast<std::size_t>(i)];
        c.t.push_back(i * cfg.delta);
        c.mean.push_back(s.n > 0 ? s.mean : kNaN);
        c.stderr_.push_back(s.stderr_mean());
        c.count.push_back(static_cast<long>(s.n));
        if (s.n > 0 && s.mean > c.sup) {
            c.sup = s.mean;
            c.sup_stderr = s.stderr_mean();
            c.sup_time = c.t.back();
        }
    }
    return c;
}

// --- decay --------------------------------------------------------------------------

std::string DecayFit::to_csv() const {
    std::string out = "t,decay,stderr\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        fmt::format_to(std::back_inserter(out), "{},{},{}\n", t[i], decay[i], stderr_[i]);
    return out;
}

nlohmann::json DecayFit::to_json() const {
    return {{"fit", fit_json(fit)}, {"singular_paths", singular_paths}};
}

DecayFit decay_functional(const SdeModel& model, const LambdaFunction& lambda, const McConfig& cfg) {
    check_x0(model, cfg);
    if (lambda.dim() != model.dim()) throw DimensionError("lambda dimension differs from the model");
    const int n = cfg.n_steps();
    SimOptions opt;
    opt.occupation = lambda.as_point_function();
    const EulerSimulator sim(model, cfg.delta, n, opt);
    const NoiseStream noise(cfg.seed);
    const Acc acc = accumulate(cfg.n_paths, 1, n + 1, cfg.threads, [&](Acc& a, long p) {
        const MeshPath path = sim.run(cfg.x0, noise, static_cast<std::uint64_t>(p));
        if (path.singular()) ++a.count_a;
        const int last = path.last_valid();
        for (int i = 0; i <= last; ++i)
            a.s[0][static_cast<std::size_t>(i)].add(std::exp(-2.0 * path.occupation[static_cast<std::size_t>(i)]));
    });
    DecayFit d;
    d.singular_paths = acc.count_a;
    for (int i = 0; i <= n; ++i) {
        const auto& s = acc.s[0][static_cast<std::size_t>(i)];
        d.t.push_back(i * cfg.delta);
        d.decay.push_back(s.n > 0 ? s.mean : kNaN);
        d.stderr_.push_back(s.stderr_mean());
    }
    d.fit = tail_fit(d.t, d.decay);
    return d;
}

// --- derivatives ----------------------------------------------------------------------

std::string DerivativeCurve::to_csv() const {
    std::string out = bound ? "t,estimate,stderr,bound\n" : "t,estimate,stderr\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        fmt::format_to(std::back_inserter(out), "{},{},{}", t[i], estimate[i], stderr_[i]);
        if (bound)
            fmt::format_to(std::back_inserter(out), ",{}",
                           bound->u_x0 * std::exp(-bound->lambda0 * t[i]) * bound->vf_norm);
        out += '\n';
    }
    return out;
}

nlohmann::json DerivativeCurve::to_json() const {
    nlohmann::json j{{"fit", fit_json(fit)}, {"exploded", exploded}};
    if (bound) {
        j["bound"] = {{"u_x0", bound->u_x0}, {"lambda0", bound->lambda0}, {"vf_norm", bound->vf_norm}};
        j["violations"] = violations;
    }
    return j;
}

DerivativeCurve derivative_estimate(const SdeModel& model, const ScalarFunction& f,
                                    const VectorField& direction, const McConfig& cfg,
                                    std::optional<DerivativeBound> bound) {
    check_x0(model, cfg);
    check_observable(model, f);
    if (direction.dim() != model.dim()) throw DimensionError("direction field dimension differs from the model");
    const int n = cfg.n_steps();
    const int dim = model.dim();
    SimOptions opt;
    opt.jacobian = true;
    const EulerSimulator sim(model, cfg.delta, n, opt);
    const NoiseStream noise(cfg.seed);
    const std::vector<double> v0 = direction(cfg.x0);
    const Acc acc = accumulate(cfg.n_paths, 1, n + 1, cfg.threads, [&](Acc& a, long p) {
        const MeshPath path = sim.run(cfg.x0, noise, static_cast<std::uint64_t>(p));
        if (path.exploded()) ++a.count_a;
        const int last = path.last_valid();
        SmallVec<double> w(static_cast<std::size_t>(dim));
        SmallVec<Jet<1>> xs(static_cast<std::size_t>(dim));
        for (int i = 0; i <= last; ++i) {
            const double* jm = path.jac(i);
            for (int r = 0; r < dim; ++r) {
                double s = 0.0;
                for (int c = 0; c < dim; ++c) s += jm[r * dim + c] * v0[static_cast<std::size_t>(c)];
                w[r] = s;
            }
            const double* y = path.state(i);
            for (int r = 0; r < dim; ++r) xs[r] = Jet<1>::variable(y[r], w[r]);
            a.s[0][static_cast<std::size_t>(i)].add(f(xs.data()).coeff(1));
        }
    });
    DerivativeCurve d;
    d.exploded = acc.count_a;
    d.bound = bound;
    std::vector<double> abs_est;
    for (int i = 0; i <= n; ++i) {
        const auto& s = acc.s[0][static_cast<std::size_t>(i)];
        const double t = i * cfg.delta;
        d.t.push_back(t);
        d.estimate.push_back(s.n > 0 ? s.mean : kNaN);
        d.stderr_.push_back(s.stderr_mean());
        abs_est.push_back(std::abs(d.estimate.back()));
        if (bound) {
            const double b = bound->u_x0 * std::exp(-bound->lambda0 * t) * bound->vf_norm;
            if (!(abs_est.back() <= b * (1.0 + 1e-9) + 3.0 * d.stderr_.back())) d.violations.push_back(t);
        }
    }
    d.fit = tail_fit(d.t, abs_est);
    return d;
}

// --- Gamma inequality ---------------------------------------------------------------------

nlohmann::json GammaResult::to_json() const {
    return {{"paths", paths}, {"violating_paths", violating_paths}, {"worst_ratio", worst_ratio}};
}

GammaResult gamma_pathwise_check(const SdeModel& model, const ScalarFunction& f,
                                 const LambdaFunction& lambda, const McConfig& cfg) {
    if (model.dim() != 1 || model.noise_count() != 1 || !model.additive())
        throw UnsupportedError("the pathwise Gamma check needs one dimension and one additive noise");
    check_x0(model, cfg);
    check_observable(model, f);
    const int n = cfg.n_steps();
    SimOptions opt;
    opt.jacobian = true;
    opt.occupation = lambda.as_point_function();
    const EulerSimulator sim(model, cfg.delta, n, opt);
    const NoiseStream noise(cfg.seed);
    double v1 = 0.0;
    model.diffusions()[0](cfg.x0.data(), &v1);
    const Acc acc = accumulate(cfg.n_paths, 0, 0, cfg.threads, [&](Acc& a, long p) {
        const MeshPath path = sim.run(cfg.x0, noise, static_cast<std::uint64_t>(p));
        const int last = path.last_valid();
        bool bad = false;
        for (int i = 0; i <= last; ++i) {
            const Jet<1> x = Jet<1>::variable(path.states[static_cast<std::size_t>(i)]);
            const double fp = f(&x).coeff(1);
            const double left = std::exp(-2.0 * path.occupation[static_cast<std::size_t>(i)]) * fp * fp * v1 * v1;
            const double jv = fp * path.jacobian[static_cast<std::size_t>(i)] * v1;
            const double right = jv * jv;
            if (left < right * (1.0 - 1e-6)) bad = true;
            if (left > 0.0) a.worst = std::max(a.worst, right / left);
        }
        if (bad) ++a.count_a;
    });
    return {cfg.n_paths, acc.count_a, acc.worst};
}

// --- ergodic averages -------------------------------------------------------------------

std::string ErgodicCurve::to_csv() const {
    std::string out = target ? "t,average,stderr,gap\n" : "t,average,stderr\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        fmt::format_to(std::back_inserter(out), "{},{},{}", t[i], average[i], stderr_[i]);
        if (target) fmt::format_to(std::back_inserter(out), ",{}", average[i] - *target);
        out += '\n';
    }
    return out;
}

nlohmann::json ErgodicCurve::to_json() const {
    nlohmann::json j{{"final_average", average.empty() ? kNaN : average.back()},
                     {"final_stderr", stderr_.empty() ? kNaN : stderr_.back()}};
    if (target) {
        j["target"] = *target;
        j["final_gap"] = average.back() - *target;
    }
    return j;
}

std::vector<ErgodicCurve> ergodic_average(const SdeModel& model, const std::vector<ScalarFunction>& phis,
                                          const McConfig& cfg,
                                          const std::vector<std::optional<double>>& targets) {
    check_x0(model, cfg);
    for (const auto& f : phis) check_observable(model, f);
    const int n = cfg.n_steps();
    const int k = static_cast<int>(phis.size());
    const EulerSimulator sim(model, cfg.delta, n);
    const NoiseStream noise(cfg.seed);
    const double h = cfg.delta;
    const Acc acc = accumulate(cfg.n_paths, k, n + 1, cfg.threads, [&](Acc& a, long p) {
        const MeshPath path = sim.run(cfg.x0, noise, static_cast<std::uint64_t>(p));
        if (path.exploded()) ++a.count_a;
        const int last = path.last_valid();
        for (int j = 0; j < k; ++j) {
            double integral = 0.0, prev = eval_at(phis[j], path.state(0));
            a.s[j][0].add(prev);
            for (int i = 1; i <= last; ++i) {
                const double cur = eval_at(phis[j], path.state(i));
                integral += 0.5 * h * (prev + cur);
                prev = cur;
                a.s[j][static_cast<std::size_t>(i)].add(integral / (i * h));
            }
        }
    });
    std::vector<ErgodicCurve> out;
    for (int j = 0; j < k; ++j) {
        ErgodicCurve c;
        if (static_cast<std::size_t>(j) < targets.size()) c.target = targets[j];
        for (int i = 0; i <= n; ++i) {
            const auto& s = acc.s[j][static_cast<std::size_t>(i)];
            c.t.push_back(i * h);
            c.average.push_back(s.n > 0 ? s.mean : kNaN);
            c.stderr_.push_back(s.stderr_mean());
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace utweak
