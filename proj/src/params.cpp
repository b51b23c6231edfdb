#include "occlurend/params.hpp"

#include <algorithm>
#include <stdexcept>

#include "occlurend/errors.hpp"
#include "occlurend/scene.hpp"

namespace occlurend {

void GradientSet::init_like(const OptimParameters& p) {
    vertices.assign(p.vertices.size(), Vec3(0, 0, 0));
    albedo_latent = Image(p.albedo_latent.width, p.albedo_latent.height, 3);
    intensity_latent = Image(p.intensity_latent.width, p.intensity_latent.height, 1);
    roughness_latent = Image(p.roughness_latent.width, p.roughness_latent.height, 1);
    for (int f = 0; f < 6; ++f) env_latent[f] = Image(p.env_resolution, p.env_resolution, 3);
}

void GradientSet::check_finite() const {
    for (const Vec3& g : vertices)
        if (!is_finite(g)) throw NumericError("gradients: non-finite gradient in group vertices");
    auto check = [](const Image& img, const char* group) {
        for (double v : img.data)
            if (!std::isfinite(v)) throw NumericError(std::string("gradients: non-finite gradient in group ") + group);
    };
    check(albedo_latent, "albedo");
    check(intensity_latent, "intensity");
    check(roughness_latent, "roughness");
    for (int f = 0; f < 6; ++f) check(env_latent[f], "environment");
}

namespace {
constexpr double kLatentClamp = 1e-5;
}

OptimParameters encode_parameters(const Scene& scene) {
    OptimParameters p;
    p.vertices = scene.mesh.vertices;
    const MaterialTextures& tex = scene.textures;
    p.albedo_latent = Image(tex.albedo.width, tex.albedo.height, 3);
    for (size_t i = 0; i < tex.albedo.data.size(); ++i)
        p.albedo_latent.data[i] = logit(std::clamp(tex.albedo.data[i], kLatentClamp, 1.0 - kLatentClamp));
    p.intensity_latent = Image(tex.intensity.width, tex.intensity.height, 1);
    for (size_t i = 0; i < tex.intensity.data.size(); ++i)
        p.intensity_latent.data[i] = logit(std::clamp(tex.intensity.data[i], kLatentClamp, 1.0 - kLatentClamp));
    p.roughness_latent = Image(tex.roughness.width, tex.roughness.height, 1);
    for (size_t i = 0; i < tex.roughness.data.size(); ++i) {
        double s = (tex.roughness.data[i] - kRoughnessMin) / (1.0 - kRoughnessMin);
        p.roughness_latent.data[i] = logit(std::clamp(s, kLatentClamp, 1.0 - kLatentClamp));
    }
    p.env_resolution = scene.env.base_resolution();
    for (int f = 0; f < 6; ++f) {
        const Image& face = scene.env.face(0, f);
        p.env_latent[f] = Image(face.width, face.height, 3);
        for (size_t i = 0; i < face.data.size(); ++i)
            p.env_latent[f].data[i] = softplus_inverse(std::max(face.data[i], kLatentClamp));
    }
    return p;
}

void decode_parameters(const OptimParameters& params, Scene& scene) {
    scene.mesh.vertices = params.vertices;
    MaterialTextures& tex = scene.textures;
    tex.albedo = Image(params.albedo_latent.width, params.albedo_latent.height, 3);
    for (size_t i = 0; i < tex.albedo.data.size(); ++i) tex.albedo.data[i] = decode_albedo(params.albedo_latent.data[i]);
    tex.intensity = Image(params.intensity_latent.width, params.intensity_latent.height, 1);
    for (size_t i = 0; i < tex.intensity.data.size(); ++i)
        tex.intensity.data[i] = decode_intensity(params.intensity_latent.data[i]);
    tex.roughness = Image(params.roughness_latent.width, params.roughness_latent.height, 1);
    for (size_t i = 0; i < tex.roughness.data.size(); ++i)
        tex.roughness.data[i] = decode_roughness(params.roughness_latent.data[i]);
    if (scene.env.base_resolution() != params.env_resolution) scene.env = EnvironmentMap(params.env_resolution);
    for (int f = 0; f < 6; ++f) {
        Image& face = scene.env.face(0, f);
        for (size_t i = 0; i < face.data.size(); ++i) face.data[i] = decode_env(params.env_latent[f].data[i]);
    }
    // The pyramid flag is left alone: the optimizer context tracks whether
    // mip 0 actually changed and re-prefilters only then.
}

}  // namespace occlurend
