#include "utweak/euler.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "utweak/parallel.hpp"

namespace utweak {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kSqrt2 = std::numbers::sqrt2;

bool too_large(const double* y, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(y[i])) return true;
        s += y[i] * y[i];
    }
    return !(std::sqrt(s) <= kExplosionThreshold);
}
}  // namespace

int MeshPath::last_valid() const {
    int last = n_steps;
    if (exploded_at >= 0) last = std::min(last, exploded_at - 1);
    if (singular_at >= 0) last = std::min(last, singular_at - 1);
    return last;
}

std::vector<double> euler_step(const SdeModel& model, std::span<const double> y, double delta,
                               std::span<const double> dB) {
    if (!(delta > 0.0)) throw PreconditionError("step size must be positive");
    const int n = model.dim();
    if (static_cast<int>(y.size()) != n || static_cast<int>(dB.size()) != model.noise_count())
        throw DimensionError("euler_step: state or increment has wrong size");
    std::vector<double> out(y.size()), v(y.size());
    model.ito_drift(y.data(), out.data());
    for (int i = 0; i < n; ++i) out[i] = y[i] + delta * out[i];
    for (int k = 0; k < model.noise_count(); ++k) {
        model.diffusions()[k](y.data(), v.data());
        for (int i = 0; i < n; ++i) out[i] += kSqrt2 * v[i] * dB[k];
    }
    return out;
}

void brownian_increments(const NoiseStream& noise, std::uint64_t path, std::uint32_t step,
                         int noise_count, double delta, int refinement, double* out) {
    if (noise_count == 0) return;
    double z[8];
    double* buf = noise_count <= 8 ? z : nullptr;
    std::vector<double> big;
    if (!buf) {
        big.resize(static_cast<std::size_t>(noise_count));
        buf = big.data();
    }
    for (int k = 0; k < noise_count; ++k) out[k] = 0.0;
    const std::uint32_t base = step * static_cast<std::uint32_t>(refinement);
    for (int j = 0; j < refinement; ++j) {
        noise.normals(path, base + static_cast<std::uint32_t>(j), noise_count, buf);
        for (int k = 0; k < noise_count; ++k) out[k] += buf[k];
    }
    const double scale = std::sqrt(delta / refinement);
    for (int k = 0; k < noise_count; ++k) out[k] *= scale;
}

EulerSimulator::EulerSimulator(const SdeModel& model, double delta, int n_steps, SimOptions options)
    : model_(model), delta_(delta), n_steps_(n_steps), opt_(std::move(options)) {
    if (!(delta > 0.0)) throw PreconditionError("step size must be positive");
    if (n_steps < 0) throw PreconditionError("step count must be non-negative");
    if (opt_.refinement < 1) throw PreconditionError("refinement must be at least 1");
    if (opt_.higher_jacobians) {
        if (model.dim() != 1 || !model.additive())
            throw UnsupportedError(
                "higher Jacobians need a one-dimensional model with additive noise");
        opt_.jacobian = true;
    }
    if (model.additive()) {
        const int n = model.dim();
        const_diffusion_.resize(static_cast<std::size_t>(model.noise_count() * n));
        const std::vector<double> origin(static_cast<std::size_t>(n), 0.0);
        for (int k = 0; k < model.noise_count(); ++k)
            model.diffusions()[k](origin.data(), const_diffusion_.data() + k * n);
    }
}

MeshPath EulerSimulator::run(std::span<const double> x0, const NoiseStream& noise,
                             std::uint64_t path_id) const {
    const int d = model_.noise_count();
    return run_impl(x0, path_id, [&](int step, double* dB) {
        brownian_increments(noise, path_id, static_cast<std::uint32_t>(step), d, delta_,
                            opt_.refinement, dB);
    });
}

MeshPath EulerSimulator::run_with_increments(std::span<const double> x0,
                                             std::span<const double> dB,
                                             std::uint64_t path_id) const {
    const int d = model_.noise_count();
    if (dB.size() != static_cast<std::size_t>(n_steps_) * d)
        throw DimensionError("increment array must hold n_steps x noise_count values");
    return run_impl(x0, path_id, [&](int step, double* out) {
        for (int k = 0; k < d; ++k) out[k] = dB[static_cast<std::size_t>(step) * d + k];
    });
}

template <class Inc>
MeshPath EulerSimulator::run_impl(std::span<const double> x0, std::uint64_t path_id,
                                  const Inc& inc) const {
    const int n = model_.dim();
    const int d = model_.noise_count();
    if (static_cast<int>(x0.size()) != n) throw DimensionError("initial point has wrong dimension");

    MeshPath p;
    p.delta = delta_;
    p.n_steps = n_steps_;
    p.dim = n;
    p.path_id = path_id;
    const std::size_t rows = static_cast<std::size_t>(n_steps_) + 1;
    p.states.assign(rows * n, kNaN);
    std::copy(x0.begin(), x0.end(), p.states.begin());
    const bool jac = opt_.jacobian;
    if (jac) {
        p.jacobian.assign(rows * n * n, kNaN);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) p.jacobian[static_cast<std::size_t>(i * n + j)] = i == j;
    }
    const bool occ = static_cast<bool>(opt_.occupation);
    if (occ) p.occupation.assign(rows, kNaN);

    // Scalar additive noise with J: J = exp(int b') by trapezoid, and one jet
    // evaluation per step supplies both b and b'.
    const bool scalar_flow = jac && n == 1 && model_.additive();
    auto drift = [this](const auto* x, auto* out) { model_.ito_drift(x, out); };

    std::vector<double> y(x0.begin(), x0.end()), ynew(static_cast<std::size_t>(n)),
        u(static_cast<std::size_t>(n)), dB(static_cast<std::size_t>(d)), v(static_cast<std::size_t>(n)),
        jcur, jnew, dcol(static_cast<std::size_t>(n)), col(static_cast<std::size_t>(n));
    if (jac && !scalar_flow) {
        jcur.assign(p.jacobian.begin(), p.jacobian.begin() + n * n);
        jnew.resize(static_cast<std::size_t>(n * n));
    }
    double log_j = 0.0, bprime = 0.0;
    auto eval_scalar = [&](double x) {
        const Jet<1> xs = Jet<1>::variable(x);
        Jet<1> b;
        drift(&xs, &b);
        u[0] = b.value();
        bprime = b.coeff(1);
    };
    if (scalar_flow) eval_scalar(y[0]);

    double lam_prev = 0.0;
    if (occ) {
        auto l = opt_.occupation(y.data());
        if (!l) {
            p.singular_at = 0;
            return p;
        }
        lam_prev = *l;
        p.occupation[0] = 0.0;
    }

    for (int step = 0; step < n_steps_; ++step) {
        inc(step, dB.data());
        if (!scalar_flow) drift(y.data(), u.data());
        for (int i = 0; i < n; ++i) ynew[i] = y[i] + delta_ * u[i];
        for (int k = 0; k < d; ++k) {
            const double* vk;
            if (model_.additive()) {
                vk = const_diffusion_.data() + k * n;
            } else {
                model_.diffusions()[k](y.data(), v.data());
                vk = v.data();
            }
            for (int i = 0; i < n; ++i) ynew[i] += kSqrt2 * vk[i] * dB[k];
        }

        if (jac && !scalar_flow) {
            // J_{n+1} = J_n + DU0 J_n delta + sqrt(2) sum_k DV_k J_n dB_k, column by column.
            for (int c = 0; c < n; ++c) {
                for (int i = 0; i < n; ++i) col[i] = jcur[i * n + c];
                directional_derivative(drift, n, y.data(), col.data(), dcol.data());
                for (int i = 0; i < n; ++i) jnew[i * n + c] = col[i] + delta_ * dcol[i];
                if (!model_.additive()) {
                    for (int k = 0; k < d; ++k) {
                        directional_derivative(model_.diffusions()[k], n, y.data(), col.data(),
                                               dcol.data());
                        for (int i = 0; i < n; ++i) jnew[i * n + c] += kSqrt2 * dcol[i] * dB[k];
                    }
                }
            }
            std::swap(jcur, jnew);
        }

        const int row = step + 1;
        if (too_large(ynew.data(), n)) {
            p.exploded_at = row;
            std::copy(ynew.begin(), ynew.end(), p.states.begin() + static_cast<std::ptrdiff_t>(row) * n);
            return p;
        }
        std::swap(y, ynew);
        std::copy(y.begin(), y.end(), p.states.begin() + static_cast<std::ptrdiff_t>(row) * n);

        if (scalar_flow) {
            const double bp_prev = bprime;
            eval_scalar(y[0]);
            log_j += 0.5 * delta_ * (bp_prev + bprime);
            p.jacobian[static_cast<std::size_t>(row)] = std::exp(log_j);
        } else if (jac) {
            std::copy(jcur.begin(), jcur.end(),
                      p.jacobian.begin() + static_cast<std::ptrdiff_t>(row) * n * n);
        }
        if (occ) {
            auto l = opt_.occupation(y.data());
            if (!l) {
                p.singular_at = row;
                return p;
            }
            p.occupation[static_cast<std::size_t>(row)] =
                p.occupation[static_cast<std::size_t>(row - 1)] + 0.5 * delta_ * (lam_prev + *l);
            lam_prev = *l;
        }
    }
    if (opt_.higher_jacobians) higher_jacobians(p, model_);
    return p;
}

void higher_jacobians(MeshPath& path, const SdeModel& model) {
    if (model.dim() != 1 || !model.additive())
        throw UnsupportedError("higher Jacobians need a one-dimensional model with additive noise");
    if (path.jacobian.empty()) throw UnsupportedError("path carries no Jacobian");
    const int last = path.last_valid();
    const std::size_t rows = static_cast<std::size_t>(path.n_steps) + 1;
    path.j2.assign(rows, kNaN);
    path.j3.assign(rows, kNaN);
    path.j4.assign(rows, kNaN);
    if (last < 0) return;

    // b2, b3, b4: second to fourth derivatives of the drift along the path.
    std::vector<double> b2(static_cast<std::size_t>(last) + 1), b3(b2.size()), b4(b2.size());
    for (int i = 0; i <= last; ++i) {
        const Jet<4> x = Jet<4>::variable(path.states[static_cast<std::size_t>(i)]);
        Jet<4> b;
        model.ito_drift(&x, &b);
        b2[i] = b.derivative(2);
        b3[i] = b.derivative(3);
        b4[i] = b.derivative(4);
    }
    const auto& J = path.jacobian;
    // I1 = int b'' J, A = int (b''' J^2 + b'' J2), C = int (b'''' J^3 + 3 b''' J J2 + b'' J3)
    double i1 = 0.0, a = 0.0, c = 0.0;
    double f1p = 0, fap = 0, fcp = 0;
    const double h = path.delta;
    for (int i = 0; i <= last; ++i) {
        const double j = J[i];
        const double f1 = b2[i] * j;
        if (i > 0) i1 += 0.5 * h * (f1p + f1);
        const double jj2 = j * i1;
        const double fa = b3[i] * j * j + b2[i] * jj2;
        if (i > 0) a += 0.5 * h * (fap + fa);
        const double jj3 = j * a + jj2 * i1;
        const double fc = b4[i] * j * j * j + 3.0 * b3[i] * j * jj2 + b2[i] * jj3;
        if (i > 0) c += 0.5 * h * (fcp + fc);
        const double jj4 = j * c + 2.0 * jj2 * a + jj3 * i1;
        path.j2[i] = jj2;
        path.j3[i] = jj3;
        path.j4[i] = jj4;
        f1p = f1;
        fap = fa;
        fcp = fc;
    }
}

std::vector<MeshPath> simulate_batch(const SdeModel& model, std::span<const double> x0,
                                     double delta, int n_steps, long n_paths, std::uint64_t seed,
                                     const SimOptions& options, int threads) {
    const EulerSimulator sim(model, delta, n_steps, options);
    const NoiseStream noise(seed);
    using Block = std::vector<MeshPath>;
    auto blocks = run_blocks<Block>(
        n_paths, [] { return Block{}; },
        [&](Block& b, long path) { b.push_back(sim.run(x0, noise, static_cast<std::uint64_t>(path))); },
        threads);
    std::vector<MeshPath> out;
    out.reserve(static_cast<std::size_t>(n_paths));
    for (auto& b : blocks)
        for (auto& p : b) out.push_back(std::move(p));
    return out;
}

std::vector<CoupledPair> coupled_reference(const SdeModel& model, std::span<const double> x0,
                                           double delta, int m, int n_steps, long n_paths,
                                           std::uint64_t seed, const SimOptions& options,
                                           int threads) {
    if (m < 1 || (m & (m - 1)) != 0) throw PreconditionError("refinement m must be a power of 2");
    SimOptions coarse_opt = options, fine_opt = options;
    coarse_opt.refinement = m;
    fine_opt.refinement = 1;
    const EulerSimulator coarse(model, delta, n_steps, coarse_opt);
    const EulerSimulator fine(model, delta / m, n_steps * m, fine_opt);
    const NoiseStream noise(seed);
    using Block = std::vector<CoupledPair>;
    auto blocks = run_blocks<Block>(
        n_paths, [] { return Block{}; },
        [&](Block& b, long path) {
            const auto id = static_cast<std::uint64_t>(path);
            b.push_back({coarse.run(x0, noise, id), fine.run(x0, noise, id)});
        },
        threads);
    std::vector<CoupledPair> out;
    for (auto& b : blocks)
        for (auto& p : b) out.push_back(std::move(p));
    return out;
}

std::string paths_to_csv(const std::vector<MeshPath>& paths) {
    std::string out;
    if (paths.empty()) return "t,path_id\n";
    const MeshPath& first = paths.front();
    const int n = first.dim;
    out += "t,path_id";
    for (int i = 1; i <= n; ++i) out += fmt::format(",x{}", i);
    const bool jac = !first.jacobian.empty();
    if (jac)
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) out += fmt::format(",J{}{}", i, j);
    const bool occ = !first.occupation.empty();
    if (occ) out += ",occ";
    out += '\n';
    for (const auto& p : paths) {
        for (int s = 0; s <= p.n_steps; ++s) {
            fmt::format_to(std::back_inserter(out), "{},{}", p.t(s), p.path_id);
            for (int i = 0; i < n; ++i) fmt::format_to(std::back_inserter(out), ",{}", p.state(s)[i]);
            if (jac)
                for (int i = 0; i < n * n; ++i) fmt::format_to(std::back_inserter(out), ",{}", p.jac(s)[i]);
            if (occ) fmt::format_to(std::back_inserter(out), ",{}", p.occupation[static_cast<std::size_t>(s)]);
            out += '\n';
        }
    }
    return out;
}

nlohmann::json batch_metadata(const SdeModel& model, std::span<const double> x0, double delta,
                              int n_steps, long n_paths, std::uint64_t seed,
                              const SimOptions& options) {
    return {{"schema_version", 1},
            {"kind", "path_batch"},
            {"seed", seed},
            {"delta", delta},
            {"n_steps", n_steps},
            {"horizon", delta * n_steps},
            {"n_paths", n_paths},
            {"x0", std::vector<double>(x0.begin(), x0.end())},
            {"model_hash", model.hash()},
            {"model", model.to_json()},
            {"jacobian", options.jacobian},
            {"occupation", static_cast<bool>(options.occupation)},
            {"refinement", options.refinement}};
}

}  // namespace utweak
