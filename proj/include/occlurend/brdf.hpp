// BRDF terms: Lambertian diffuse and a Kelemen-style specular lobe built on
// the Beckmann normal distribution, with Schlick Fresnel and the Kelemen
// geometric simplification DGF / (4 (wi.n)(wo.n)) -> D F / (2 (1 + wi.wo)).
//
// Also the first split-sum factor baked as a 64x64 (cos theta, roughness)
// table of (scale, bias) pairs with the Fresnel constant factored out:
// integral ~= scale * f0 + bias.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occlurend/vec.hpp"

namespace occlurend {

constexpr double kRoughnessMin = 0.01;
constexpr double kDefaultF0 = 0.028;  // skin Fresnel reflectance at normal incidence

struct SpecularParams {
    double intensity = 1.0;   // >= 0, per-texel multiplier on the lobe
    double roughness = 0.5;   // in [kRoughnessMin, 1]
    double f0 = kDefaultF0;   // in [0, 1]
};

// Lambertian: rho / pi per channel.
inline Vec3 lambert_eval(const Vec3& rho) { return rho * (1.0 / kPi); }

// Beckmann NDF at half vector h; 0 for back-facing h.
double beckmann_d(const Vec3& n, const Vec3& h, double roughness);
double beckmann_d_cos(double cos_theta_h, double roughness);

// Full specular lobe value (scalar; the lobe is uncolored, f0 is achromatic).
double kelemen_specular_eval(const Vec3& wi, const Vec3& wo, const Vec3& n, const SpecularParams& p);

struct NdfSample {
    Vec3 wi;
    Vec3 h;
    double pdf = 0.0;     // solid-angle density of wi
    bool valid = false;   // false when wi falls below the horizon
};

// Samples h from the D(h)(n.h) density by the standard Beckmann inversion
// (tan^2 theta_h = -r^2 ln(1 - u1), phi = 2 pi u2) and reflects wo about h.
// Deterministic in u.
NdfSample sample_ndf(const Vec3& n, const Vec3& wo, double roughness, double u1, double u2);

struct BrdfLut {
    static constexpr int kResolution = 64;
    static constexpr double kCosMin = 0.01;

    std::vector<double> scale;  // kResolution^2, row-major (cos index fast)
    std::vector<double> bias;

    bool empty() const { return scale.empty(); }
    // Bilinear lookup at cell centers with clamped edges; optional slopes.
    void lookup(double cos_theta, double roughness, double* out_scale, double* out_bias,
                double* dscale_dcos = nullptr, double* dbias_dcos = nullptr, double* dscale_dr = nullptr,
                double* dbias_dr = nullptr) const;

    static double cos_at(int i) { return kCosMin + (i + 0.5) * (1.0 - kCosMin) / kResolution; }
    static double rough_at(int j) { return kRoughnessMin + (j + 0.5) * (1.0 - kRoughnessMin) / kResolution; }
};

// Bakes the table with quasi-random NDF sampling; deterministic in seed.
BrdfLut precompute_brdf_lut(int samples_per_cell = 1024, uint64_t seed = 0);

// PFM round trip (64x64x3: scale, bias, zero).
void write_brdf_lut(const std::string& path, const BrdfLut& lut);
BrdfLut read_brdf_lut(const std::string& path);

}  // namespace occlurend
