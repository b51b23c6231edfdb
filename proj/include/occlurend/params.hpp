// Free parameters of the inverse problem and their latent encodings.
//
// Textures live as unconstrained latents squashed into their valid ranges
// (sigmoid to [0,1] for albedo and specular intensity, sigmoid scaled to
// [r_min, 1] for roughness); environment mip-0 texels are softplus latents
// so radiance stays non-negative. Vertices are raw model-space positions.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "occlurend/brdf.hpp"
#include "occlurend/image.hpp"
#include "occlurend/vec.hpp"

namespace occlurend {

inline double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
inline double sigmoid_grad(double s) { return s * (1.0 - s); }
inline double logit(double y) { return std::log(y) - std::log1p(-y); }
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

struct OptimParameters {
    std::vector<Vec3> vertices;
    Image albedo_latent;     // 3 channels
    Image intensity_latent;  // 1 channel
    Image roughness_latent;  // 1 channel
    std::array<Image, 6> env_latent;  // mip-0 faces, 3 channels
    int env_resolution = 0;
};

struct FreezeFlags {
    bool vertices = false;
    bool albedo = false;
    bool intensity = false;
    bool roughness = false;
    bool env = false;
};

struct GradientSet {
    std::vector<Vec3> vertices;
    Image albedo_latent;
    Image intensity_latent;
    Image roughness_latent;
    std::array<Image, 6> env_latent;

    void init_like(const OptimParameters& p);
    // Throws naming the parameter group if any entry is non-finite.
    void check_finite() const;
};

// Latent decoders.
inline double decode_albedo(double latent) { return sigmoid(latent); }
inline double decode_intensity(double latent) { return sigmoid(latent); }
inline double decode_roughness(double latent) { return kRoughnessMin + (1.0 - kRoughnessMin) * sigmoid(latent); }
inline double decode_env(double latent) { return softplus(latent); }

// Value-space derivative factors d(value)/d(latent).
inline double decode_albedo_grad(double value) { return sigmoid_grad(value); }
inline double decode_intensity_grad(double value) { return sigmoid_grad(value); }
inline double decode_roughness_grad(double value) {
    double s = (value - kRoughnessMin) / (1.0 - kRoughnessMin);
    return (1.0 - kRoughnessMin) * sigmoid_grad(s);
}
inline double decode_env_grad(double latent) { return sigmoid(latent); }

// Builds latents whose decoded values reproduce the given textures and
// environment (values clamped into the decoders' open ranges first).
class Scene;
OptimParameters encode_parameters(const Scene& scene);

// Decodes latents into the scene's textures, mesh and environment mip 0.
// Does not rebuild normals, BVH or the pyramid; callers do that.
void decode_parameters(const OptimParameters& params, Scene& scene);

}  // namespace occlurend
