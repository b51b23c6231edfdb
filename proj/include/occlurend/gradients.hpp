// Loss evaluation and reverse-mode gradients of the full objective.
//
// The backward pass differentiates exactly the expression the forward pass
// evaluates, holding fixed (as iteration constants): visibility outcomes,
// the pixel-triangle assignment, and the sampled directions. Light-sample
// geometric factors (cosine term and its pdf appearance in the MIS
// denominator) are differentiated with the world direction held fixed;
// cosine-strategy directions co-rotate with the shading frame, so their
// geometric factors are invariant and contribute no normal gradient. The
// light sampler's pdf dependence on the environment (per-texel luminance and
// the global normalizer) is differentiated analytically.
#pragma once

#include <cstdint>
#include <vector>

#include "occlurend/losses.hpp"
#include "occlurend/params.hpp"
#include "occlurend/render.hpp"
#include "occlurend/scene.hpp"

namespace occlurend {

struct OptimContext {
    Scene* scene = nullptr;
    Pipeline pipeline;
    UniformLaplacian laplacian;
    std::vector<Vec3> v_init;
    LossWeights weights;
    SampleBudget budget;
    uint64_t seed = 0;
    bool visibility_enabled = true;
    bool image_loss_masked = false;  // restrict L1 data term to target mask

    // Set by the optimize loop when a group is frozen, so sync_state can skip
    // rebuilding state that cannot have changed. Default-off: every call
    // rebuilds, which is what perturbation-based callers need.
    bool assume_geometry_constant = false;
    bool assume_env_constant = false;
    bool geometry_synced = false;
    bool env_synced = false;

    void init(Scene& s, const LossWeights& w, const SampleBudget& b, uint64_t seed_, bool visibility = true);
};

// Decodes params into the scene and refreshes the derived state the flags
// say is stale (normals + BVH for geometry, pyramid for the environment).
void sync_state(OptimContext& ctx, const OptimParameters& params);

struct ForwardResult {
    LossBreakdown loss;
    std::vector<RenderOutput> renders;  // one per batch frame
};

// Forward pipeline at matched samples; same path the gradients differentiate.
ForwardResult evaluate_loss(OptimContext& ctx, const OptimParameters& params, const std::vector<int>& frame_indices,
                            uint64_t iteration);

struct GradientResult {
    LossBreakdown loss;
    GradientSet grads;
};

GradientResult compute_gradients(OptimContext& ctx, const OptimParameters& params, const std::vector<int>& frame_indices,
                                 uint64_t iteration, const FreezeFlags& freeze);

}  // namespace occlurend
