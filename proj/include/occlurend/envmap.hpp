// Cubemap environment radiance with a roughness-indexed mip pyramid and a
// luminance-weighted texel sampler for light importance sampling.
//
// Face layout (face = argmax |component|, u/v from the two minor components
// over the major one, OpenGL cubemap orientation):
//   0 +x: u <- -z, v <- -y      1 -x: u <- +z, v <- -y
//   2 +y: u <- +x, v <- +z      3 -y: u <- +x, v <- -z
//   4 +z: u <- +x, v <- -y      5 -z: u <- -x, v <- -y
// with p in [-1,1] mapped to [0,1] by (p + 1) / 2.
//
// Mip level k holds the radiance convolved against the Beckmann NDF at
// roughness r(k), affine from kRoughnessMin at level 0 to 1.0 at the
// coarsest level; level 0 is the unfiltered radiance (the r -> r_min
// identity limit). Raw radiance reads are piecewise constant per texel;
// only the prefiltered pyramid is interpolated.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "occlurend/image.hpp"
#include "occlurend/vec.hpp"

namespace occlurend {

inline const char* kCubeFaceNames[6] = {"px", "nx", "py", "ny", "pz", "nz"};

// Face index plus in-face coordinates in [0,1]^2 for a unit direction.
int dir_to_face_uv(const Vec3& w, double* u, double* v);
// Same, also returning du/dw and dv/dw (valid in the face interior).
int dir_to_face_uv_grad(const Vec3& w, double* u, double* v, Vec3* du_dw, Vec3* dv_dw);
// Unit direction of face coordinates (u, v).
Vec3 face_uv_to_dir(int face, double u, double v);
// Unit direction of the texel center.
Vec3 texel_center_dir(int face, int res, int x, int y);
// Exact solid angle of texel (x, y) on a res x res cube face.
double texel_solid_angle(int res, int x, int y);

// Spec-facing helper: texel coordinates of a direction at a mip resolution.
struct TexelCoord {
    int face = 0;
    int x = 0;
    int y = 0;
};
TexelCoord dir_to_texel(const Vec3& w, int res);

class EnvironmentMap {
public:
    EnvironmentMap() = default;
    // base_resolution must be a power of two >= 8; levels run down to 8x8.
    explicit EnvironmentMap(int base_resolution);

    int base_resolution() const { return base_resolution_; }
    int levels() const { return levels_; }
    int resolution_at(int level) const { return base_resolution_ >> level; }
    double roughness_at(int level) const;
    bool pyramid_built() const { return pyramid_built_; }

    Image& face(int level, int f) { return mips_[level][f]; }
    const Image& face(int level, int f) const { return mips_[level][f]; }

    // Raw radiance at mip 0, nearest texel.
    Vec3 radiance(const Vec3& w) const;
    // Linear texel index into a level (face-major), and its inverse.
    int64_t texel_index(int level, int face, int x, int y) const;
    int64_t texel_count(int level) const { return 6LL * resolution_at(level) * resolution_at(level); }

    void mark_mip0_dirty() { pyramid_built_ = false; }

private:
    int base_resolution_ = 0;
    int levels_ = 0;
    bool pyramid_built_ = false;
    std::vector<std::array<Image, 6>> mips_;

    friend void prefilter_envmap(EnvironmentMap& env);
};

// Per-texel NDF sample counts: 1024 at the 8x8 level, scaled down with texel
// count and floored at 64 so fine mips stay usable.
int prefilter_samples_for_resolution(int res);

// One convolution tap: the mip-0 texel a sample landed in plus its weight.
struct PrefilterTap {
    int64_t texel = 0;   // linear index at level 0
    double weight = 0.0;  // normalized; taps of one output texel sum to 1
};
// Deterministic tap list of output texel (level, face, x, y); the same list
// the prefilter consumed, so adjoints can be pushed back through it.
void prefilter_taps(const EnvironmentMap& env, int level, int face, int x, int y, std::vector<PrefilterTap>& taps);

// Fills levels 1..K-1 from level 0 (level 0 is copied as-is).
void prefilter_envmap(EnvironmentMap& env);

// Trilinear lookup: bilinear (clamped) in the two mips bracketing r, linear
// across them. Throws if the pyramid has not been built.
Vec3 lookup_prefiltered(const EnvironmentMap& env, const Vec3& wr, double roughness);

// Lookup with everything the backward pass needs.
struct PrefilteredLookup {
    Vec3 value;
    Vec3 dvalue_dr;
    Vec3 dvalue_dwr[3];  // dvalue_dwr[c] = gradient of channel c w.r.t. wr
    struct LevelTap {
        int level;
        int face;
        int x[4], y[4];
        double w[4];        // bilinear weights
        double level_weight;  // lerp weight across mips
    };
    LevelTap taps[2];
    int tap_count = 0;
};
PrefilteredLookup lookup_prefiltered_grad(const EnvironmentMap& env, const Vec3& wr, double roughness);

struct LightSample {
    Vec3 direction;
    double pdf = 0.0;  // solid-angle measure
    Vec3 radiance;
    int64_t texel = -1;  // mip-0 linear index; -1 for the uniform fallback
};

// Discrete distribution over mip-0 texels, probability proportional to
// luminance times texel solid angle. An all-black map falls back to uniform
// sphere sampling with pdf 1 / (4 pi).
//
// Selection and jitter take separate uniforms: reusing the rescaled CDF
// residual for the jitter would make every sampled direction drift when any
// texel's luminance moves, a dependence the detached gradients do not carry.
class LightSampler {
public:
    LightSampler() = default;
    explicit LightSampler(const EnvironmentMap& env);

    LightSample sample(const EnvironmentMap& env, double u_select, double u_jitter1, double u_jitter2) const;
    // Density of sample() at direction w.
    double pdf(const Vec3& w) const;
    bool uniform_fallback() const { return uniform_; }
    // Integral normalizer: sum over texels of luminance * solid angle.
    double total() const { return total_; }
    double luminance_at(int64_t texel) const { return luminance_[texel]; }

private:
    int res_ = 0;
    bool uniform_ = true;
    double total_ = 0.0;
    std::vector<double> luminance_;  // per mip-0 texel
    std::vector<double> cdf_;        // over texels, last entry 1
};

inline double rgb_luminance(const Vec3& c) { return 0.2126 * c.x + 0.7152 * c.y + 0.0722 * c.z; }

// Disk layout: <dir>/{px,nx,py,ny,pz,nz}.pfm plus descriptor.json.
void write_environment(const std::string& dir, const EnvironmentMap& env);
EnvironmentMap read_environment(const std::string& descriptor_or_dir);

}  // namespace occlurend
