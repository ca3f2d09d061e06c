#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "utweak/model.hpp"
#include "utweak/noise.hpp"

namespace utweak {

/// Paths whose norm exceeds this are flagged as exploded.
inline constexpr double kExplosionThreshold = 1e150;

/// Scalar function of the state; nullopt marks a singular point.
using PointFunction = std::function<std::optional<double>(const double* x)>;

struct SimOptions {
    /// Carry the first variation J_t = dX_t/dx.
    bool jacobian = false;
    /// Carry J^(2..4); one-dimensional additive-noise models only.
    bool higher_jacobians = false;
    /// Running trapezoid integral of this function along the path.
    PointFunction occupation;
    /// Each increment is the sum of this many normals on the finer grid
    /// delta / refinement, which couples a coarse path to a fine one.
    int refinement = 1;
};

/// One Euler trajectory on the mesh t_i = i * delta.
struct MeshPath {
    double delta = 0.0;
    int n_steps = 0;
    int dim = 0;
    std::uint64_t path_id = 0;
    std::vector<double> states;      // (n_steps + 1) x dim
    std::vector<double> jacobian;    // (n_steps + 1) x dim x dim, row-major per step
    std::vector<double> j2, j3, j4;  // (n_steps + 1), scalar models only
    std::vector<double> occupation;  // (n_steps + 1)
    int exploded_at = -1;            // first step with |Y| above threshold
    int singular_at = -1;            // first step where the occupation integrand was singular

    double t(int i) const { return i * delta; }
    const double* state(int i) const { return states.data() + static_cast<std::size_t>(i) * dim; }
    const double* jac(int i) const {
        return jacobian.data() + static_cast<std::size_t>(i) * dim * dim;
    }
    bool exploded() const { return exploded_at >= 0; }
    bool singular() const { return singular_at >= 0; }
    /// Last step carrying valid data.
    int last_valid() const;
};

/// One explicit Euler update Y + U0(Y) delta + sqrt(2) sum_k V_k(Y) dB_k.
std::vector<double> euler_step(const SdeModel& model, std::span<const double> y, double delta,
                               std::span<const double> dB);

/// Brownian increments for step `step` of a path at mesh delta, using
/// `refinement` normals per increment on the grid delta / refinement.
void brownian_increments(const NoiseStream& noise, std::uint64_t path, std::uint32_t step,
                         int noise_count, double delta, int refinement, double* out);

/// Reusable simulator for one model and configuration.
class EulerSimulator {
public:
    EulerSimulator(const SdeModel& model, double delta, int n_steps, SimOptions options = {});
    /// The model is held by reference.
    EulerSimulator(SdeModel&&, double, int, SimOptions = {}) = delete;

    const SdeModel& model() const { return model_; }
    double delta() const { return delta_; }
    int n_steps() const { return n_steps_; }

    /// Simulates path `path_id` driven by `noise`.
    MeshPath run(std::span<const double> x0, const NoiseStream& noise, std::uint64_t path_id) const;

    /// Simulates with caller-supplied increments, n_steps x noise_count.
    MeshPath run_with_increments(std::span<const double> x0, std::span<const double> dB,
                                 std::uint64_t path_id = 0) const;

private:
    template <class Inc>
    MeshPath run_impl(std::span<const double> x0, std::uint64_t path_id, const Inc& inc) const;

    const SdeModel& model_;
    double delta_;
    int n_steps_;
    SimOptions opt_;
    std::vector<double> const_diffusion_;  // noise_count x dim when additive
};

/// simulate_batch: paths 0..n_paths-1 with the given seed.
std::vector<MeshPath> simulate_batch(const SdeModel& model, std::span<const double> x0,
                                     double delta, int n_steps, long n_paths, std::uint64_t seed,
                                     const SimOptions& options = {}, int threads = 0);

/// Post-hoc J^(2), J^(3), J^(4) from the stored states and J of a scalar
/// additive-noise path (nested trapezoid integrals).
void higher_jacobians(MeshPath& path, const SdeModel& model);

struct CoupledPair {
    MeshPath coarse;
    MeshPath fine;
};

/// Coarse path at delta and fine path at delta / m sharing Brownian motion.
std::vector<CoupledPair> coupled_reference(const SdeModel& model, std::span<const double> x0,
                                           double delta, int m, int n_steps, long n_paths,
                                           std::uint64_t seed, const SimOptions& options = {},
                                           int threads = 0);

/// Path dump with header t,path_id,x1..xN[,J11..JNN][,occ].
std::string paths_to_csv(const std::vector<MeshPath>& paths);

/// Sidecar metadata for a batch.
nlohmann::json batch_metadata(const SdeModel& model, std::span<const double> x0, double delta,
                              int n_steps, long n_paths, std::uint64_t seed,
                              const SimOptions& options);

}  // namespace utweak
