// Synthetic capture generator: analytic base meshes (icosphere or a blob
// with a dent deep enough to self-occlude), ground-truth texture patterns,
// a structured environment, a head-rotation-style pose sweep, and rendered
// target images and masks.
#pragma once

#include <cstdint>
#include <string>

#include "occlurend/scene.hpp"
#include "occlurend/shading.hpp"

namespace occlurend {

// Icosphere: subdivided icosahedron projected to the given radius, spherical
// UVs with the wrap fixed per face corner.
TriangleMesh make_icosphere(int subdivisions, double radius = 1.0);

// Icosphere with a smooth radial dent: r(p) = radius * (1 - depth *
// exp(-|p - center|^2 / width^2)). Defaults produce a concavity whose
// specular visibility clearly drops below 1.
TriangleMesh make_dented_blob(int subdivisions, double radius = 1.0, double dent_depth = 0.6,
                              double dent_width = 0.45);

// UV-space mask of texels whose surface points fall inside the dent.
Image dent_region_mask(int width, int height, double dent_width = 0.45);

struct SyntheticSpec {
    std::string base = "sphere";  // "sphere" or "dented_blob"
    int subdivisions = 3;
    int poses = 20;
    double rotation_range_deg = 25.0;  // sweep of +-range around y plus a small x nod
    int image_size = 128;
    int texture_size = 128;
    int env_resolution = 64;
    std::string env_kind = "blobs";  // "blobs" or "uniform"
    double env_uniform_value = 1.0;
    std::string albedo_pattern = "two_tone";  // "two_tone", "constant", "smooth"
    Vec3 albedo_a = Vec3(0.75, 0.45, 0.30);
    Vec3 albedo_b = Vec3(0.20, 0.35, 0.60);
    double intensity_value = 0.35;
    double roughness_value = 0.25;
    SampleBudget target_budget{128, 128, 32};
    uint64_t seed = 7;
};

// Generates the full scene directory: mesh, ground-truth textures and
// environment, per-frame poses, rendered target images and masks, plus a
// ground_truth/ copy for evaluation (and the dent-region mask when the base
// has one).
void synthesize_dataset(const SyntheticSpec& spec, const std::string& out_dir);

// In-memory variant used by tests; targets are rendered iff render_targets.
Scene build_synthetic_scene(const SyntheticSpec& spec, bool render_targets);

// Structured low-frequency environment: a dim floor plus a few broad bright
// lobes; deterministic in seed.
EnvironmentMap make_blob_environment(int resolution, uint64_t seed = 7);

}  // namespace occlurend
