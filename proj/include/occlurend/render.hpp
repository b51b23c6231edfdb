// Primary visibility and per-frame image synthesis: one ray per pixel
// center, bilinear texture fetch at the hit UV, then the shading model.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occlurend/scene.hpp"
#include "occlurend/shading.hpp"

namespace occlurend {

struct HitRecord {
    int face = -1;
    double b1 = 0.0, b2 = 0.0;
    Vec2 uv;
};

struct RenderOutput {
    Image color;     // 3 channels
    Image diffuse;   // 3 channels; color == diffuse + specular on coverage
    Image specular;  // 3 channels
    Image mask;      // 1 channel, binary coverage
    std::vector<HitRecord> hits;  // one per pixel
};

// Geometric surface data at a primary hit. The barycentrics and derived
// quantities are recomputed from the hit face with plain Moller-Trumbore so
// the forward values are exactly the expression the backward pass
// differentiates.
struct SurfacePoint {
    bool hit = false;
    int face = -1;
    double t = 0.0;
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    Vec2 uv;
    Vec3 o_m, d_m;        // model-space primary ray
    Vec3 x_m, x_w;        // hit position
    Vec3 n_bary_m;        // sum of barycentric-weighted vertex normals, unnormalized
    Vec3 n_w;             // unit shading normal, world
    Vec3 g_w;             // unit geometric normal, world (faces the ray)
    Vec3 wo;              // unit direction to the camera
};

SurfacePoint trace_surface(const Scene& scene, const Bvh& bvh, const Frame& frame, int px, int py);

// Full shade of one traced pixel; shared by the renderer and the optimizer.
ShadePoint make_shade_point(const Scene& scene, const SurfacePoint& sp, const MaterialSample& mat);

// One primary ray per pixel center. Throws if the pipeline is unbuilt or a
// parameter texture contains a non-finite value (named in the message).
RenderOutput render_frame(const Pipeline& pipeline, const Frame& frame, const SampleBudget& budget, uint64_t seed,
                          uint64_t iteration = 0, bool visibility_enabled = true);

// Coverage only; no shading, no gradients.
Image render_mask(const Pipeline& pipeline, const Frame& frame);

// Forward renders of the frames' poses under a replacement environment.
// The pipeline's scene is untouched; new_env must hold mip-0 radiance and is
// prefiltered here if needed.
std::vector<RenderOutput> relight(const Pipeline& pipeline, EnvironmentMap& new_env,
                                  const std::vector<Frame>& frames, const SampleBudget& budget, uint64_t seed,
                                  bool visibility_enabled = true);

}  // namespace occlurend
