// Adam per parameter group, the Laplacian-preconditioned vertex update, and
// the optimization loop with logging and checkpoints.
//
// The vertex step solves (I + lambda_geo L)^2 u = g by conjugate gradients
// (g being the Adam-processed vertex gradient) and moves against u. The
// squared operator as printed would sharpen rather than smooth; the inverse
// realizes the smoothing bias the preconditioning is for.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occlurend/gradients.hpp"
#include "occlurend/params.hpp"

namespace occlurend {

struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;

    void ensure(size_t n) {
        if (m.size() != n) {
            m.assign(n, 0.0);
            v.assign(n, 0.0);
        }
    }
};

struct OptimState {
    AdamMoments vertices;
    AdamMoments albedo;
    AdamMoments intensity;
    AdamMoments roughness;
    AdamMoments env[6];
    int64_t step = 0;

    double lr_vertices = 0.1;
    double lr_env = 0.1;
    double lr_textures = 0.001;
    double lambda_geo = 19.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool precondition_before_adam = false;  // alternative composition order
};

// In-place bias-corrected Adam direction for one flat array: writes the
// update direction m_hat / (sqrt(v_hat) + eps) into grad. step must already
// be advanced to the current step index (1-based).
void adam_direction(AdamMoments& moments, int64_t step, double beta1, double beta2, double epsilon, double* grad,
                    size_t n);

// Solves (I + lambda L)^2 u = g to relative residual 1e-6 by Jacobi-
// preconditioned conjugate gradients. lambda == 0 returns g unchanged.
// Throws after 10 * N iterations without convergence.
std::vector<Vec3> solve_preconditioned(const UniformLaplacian& lap, double lambda, const std::vector<Vec3>& g);

// Adam on the raw vertex gradient, then the smoothing solve, then the step:
// v <- v - lr * u. With precondition_before_adam the solve runs first and
// Adam tracks moments of the smoothed gradient.
void preconditioned_vertex_step(OptimState& state, const UniformLaplacian& lap, std::vector<Vec3>& vertices,
                                const std::vector<Vec3>& grad);

// One full update of every unfrozen group (advances state.step once).
void apply_updates(OptimState& state, const UniformLaplacian& lap, OptimParameters& params, const GradientSet& grads,
                   const FreezeFlags& freeze);

struct OptimizeOptions {
    int iterations = 6000;
    int batch_size = 1;
    int checkpoint_every = 500;
    uint64_t seed = 0;
    FreezeFlags freeze;
    std::string output_dir;
};

struct IterationLog {
    int64_t iteration = 0;
    LossBreakdown loss;
};

// The optimization loop: per iteration, sample a frame batch (uniform
// without replacement per epoch), render + gradients at matched samples,
// update, re-prefilter the environment. Writes ckpt_<iter>/ directories and
// log.jsonl under output_dir; returns the per-iteration log.
std::vector<IterationLog> optimize(OptimContext& ctx, OptimParameters& params, OptimState& state,
                                   const OptimizeOptions& options);

// Checkpoint layout: mesh.obj, albedo.pfm, specular.pfm, roughness.pfm,
// env/{px..nz}.pfm, env/descriptor.json.
void write_checkpoint(const std::string& dir, const Scene& scene);

}  // namespace occlurend
