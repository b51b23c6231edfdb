// Per-point radiance: visibility-modulated split-sum specular plus
// ray-traced diffuse with balance-heuristic multiple importance sampling.
//
// The specular path reads two precomputed tables (BRDF LUT and prefiltered
// environment pyramid) and gates the result by a view-dependent visibility
// estimate around the reflected direction. Visibility sample outcomes are
// constants of the current iteration: no gradient flows through ray hits.
#pragma once

#include <cstdint>
#include <vector>

#include "occlurend/brdf.hpp"
#include "occlurend/bvh.hpp"
#include "occlurend/envmap.hpp"
#include "occlurend/rng.hpp"
#include "occlurend/vec.hpp"

namespace occlurend {

struct SampleBudget {
    int n_light = 256;  // light samples for diffuse
    int n_brdf = 256;   // cosine samples for diffuse
    int n_vis = 64;     // NDF samples for the specular visibility estimate
};

struct ShadePoint {
    Vec3 position;        // world space
    Vec3 normal;          // unit shading normal, world space
    Vec3 geom_normal;     // unit geometric normal, used for ray offsets
    Vec3 wo;              // unit direction towards the camera
    Vec3 albedo;          // rho, each channel in [0, 1]
    SpecularParams spec;  // per-texel intensity and roughness
};

// Everything a shade call needs besides the point itself. Occlusion rays are
// cast against the model-space BVH, so world positions/directions are mapped
// through model_from_world first.
struct ShadeContext {
    const TriangleMesh* mesh = nullptr;
    const Bvh* bvh = nullptr;
    const EnvironmentMap* env = nullptr;
    const LightSampler* sampler = nullptr;
    const BrdfLut* lut = nullptr;
    RigidTransform world_from_model;
    RigidTransform model_from_world;
    double occlusion_eps = 1e-4;
    bool visibility_enabled = true;      // false forces V-tilde == 1 (ablation)
    bool visibility_as_printed = false;  // per-sample 1/D estimator variant
};

// Binary visibility of world-space direction w from world-space point x.
int trace_visibility(const ShadeContext& ctx, const Vec3& x, const Vec3& geom_n, const Vec3& w);

// View-dependent specular visibility in [0, 1]: the self-normalized average
// of binary visibility over NDF-distributed directions around the reflected
// view. At the roughness floor the lobe is treated as a mirror and a single
// reflected ray decides. Requires dot(wo, n) > 0.
double estimate_specular_visibility(const ShadeContext& ctx, const ShadePoint& point, const SampleBudget& budget,
                                    Pcg32& rng);

// One diffuse MIS sample, kept for the backward pass.
struct DiffuseSampleRecord {
    Vec3 w;            // world direction
    Vec3 radiance;     // environment value at w (piecewise constant)
    int64_t texel;     // mip-0 texel index, -1 for uniform fallback
    double p_light;    // light-sampler pdf at w
    double cos_n;      // dot(w, n), > 0
    double denom;      // n_light * p_light + n_brdf * p_cos
    int visible;       // 0/1
    bool from_light;   // which strategy drew it
};

// (rho / pi) * integral of L * V * cos over the hemisphere, estimated with
// n_light light samples and n_brdf cosine samples under the balance
// heuristic. Deterministic given rng state.
Vec3 shade_diffuse(const ShadeContext& ctx, const ShadePoint& point, const SampleBudget& budget, Pcg32& rng,
                   std::vector<DiffuseSampleRecord>* log = nullptr);

// Split-sum specular: intensity * (scale * f0 + bias) * V-tilde * prefiltered
// lookup at (reflected direction, roughness). Zero when dot(wo, n) <= 0.
Vec3 shade_specular(const ShadeContext& ctx, const ShadePoint& point, double vis_tilde);

struct ShadeResult {
    Vec3 color;
    Vec3 diffuse;
    Vec3 specular;
    double vis_tilde = 1.0;
};

ShadeResult shade(const ShadeContext& ctx, const ShadePoint& point, const SampleBudget& budget, Pcg32& rng,
                  std::vector<DiffuseSampleRecord>* diffuse_log = nullptr);

}  // namespace occlurend
