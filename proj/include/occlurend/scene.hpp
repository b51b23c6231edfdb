// Scene description: mesh, material textures, environment, camera and the
// posed frame set, plus the JSON loader / writer for the on-disk format.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "occlurend/brdf.hpp"
#include "occlurend/bvh.hpp"
#include "occlurend/envmap.hpp"
#include "occlurend/image.hpp"
#include "occlurend/laplacian.hpp"
#include "occlurend/mesh.hpp"
#include "occlurend/vec.hpp"

namespace occlurend {

struct Camera {
    double focal_px = 100.0;  // > 0
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;  // >= 8 x 8
    RigidTransform camera_to_world;

    // World-space ray through the pixel center; camera space is x right,
    // y down, z forward.
    Ray primary_ray(int px, int py) const;
};

struct Frame {
    int id = 0;
    RigidTransform model_to_world;
    std::optional<Image> target;  // linear RGB
    std::optional<Image> mask;    // scalar in [0, 1]
};

struct MaterialTextures {
    Image albedo;     // 3 channels
    Image intensity;  // 1 channel
    Image roughness;  // 1 channel
};

// Values and uv-slopes at one surface point, after range clamping.
struct MaterialSample {
    Vec3 albedo;
    double intensity = 0.0;
    double roughness = kRoughnessMin;
    Vec3 dalbedo_du, dalbedo_dv;
    double dintensity_du = 0.0, dintensity_dv = 0.0;
    double droughness_du = 0.0, droughness_dv = 0.0;
};
MaterialSample sample_material(const MaterialTextures& tex, const Vec2& uv);

struct Scene {
    TriangleMesh mesh;
    MaterialTextures textures;
    EnvironmentMap env;
    Camera camera;
    std::vector<Frame> frames;
    double f0 = kDefaultF0;

    // Self-intersection offset: 1e-4 of the mesh bounding-box diagonal.
    double occlusion_eps() const { return 1e-4 * mesh.bbox_diagonal(); }
};

// Throws std::runtime_error with a descriptive message on any defect
// (bad schema version, missing keys, malformed pose, shape mismatch).
Scene load_scene(const std::string& json_path);

// Writes scene.json plus all referenced assets under dir.
void save_scene(const std::string& dir, const Scene& scene, bool write_targets = true);

// Renderer-facing bundle of immutable per-iteration state.
struct Pipeline {
    const Scene* scene = nullptr;
    Bvh bvh;
    BrdfLut lut;
    bool built = false;

    void build(const Scene& s, int lut_samples = 1024);
};

}  // namespace occlurend
