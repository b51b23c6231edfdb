#include "occlurend/envmap.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "occlurend/brdf.hpp"
#include "occlurend/parallel.hpp"
#include "occlurend/rng.hpp"

namespace occlurend {

namespace {

// Per-face axes: dir = major_axis * sign + sc_axis * a + tc_axis * b.
struct FaceBasis {
    int major;      // component index of the face axis
    double msign;   // its sign
    int s_axis;     // component feeding u
    double s_sign;
    int t_axis;     // component feeding v
    double t_sign;
};

constexpr FaceBasis kFaces[6] = {
    {0, +1.0, 2, -1.0, 1, -1.0},  // +x
    {0, -1.0, 2, +1.0, 1, -1.0},  // -x
    {1, +1.0, 0, +1.0, 2, +1.0},  // +y
    {1, -1.0, 0, +1.0, 2, -1.0},  // -y
    {2, +1.0, 0, +1.0, 1, -1.0},  // +z
    {2, -1.0, 0, -1.0, 1, -1.0},  // -z
};

int pick_face(const Vec3& w) {
    double ax = std::fabs(w.x), ay = std::fabs(w.y), az = std::fabs(w.z);
    if (ax >= ay && ax >= az) return w.x >= 0.0 ? 0 : 1;
    if (ay >= az) return w.y >= 0.0 ? 2 : 3;
    return w.z >= 0.0 ? 4 : 5;
}

}  // namespace

int dir_to_face_uv(const Vec3& w, double* u, double* v) {
    int f = pick_face(w);
    const FaceBasis& fb = kFaces[f];
    double ma = w[fb.major] * fb.msign;  // > 0 on this face
    double a = w[fb.s_axis] * fb.s_sign / ma;
    double b = w[fb.t_axis] * fb.t_sign / ma;
    *u = 0.5 * (a + 1.0);
    *v = 0.5 * (b + 1.0);
    return f;
}

int dir_to_face_uv_grad(const Vec3& w, double* u, double* v, Vec3* du_dw, Vec3* dv_dw) {
    int f = pick_face(w);
    const FaceBasis& fb = kFaces[f];
    double ma = w[fb.major] * fb.msign;
    double s = w[fb.s_axis] * fb.s_sign;
    double t = w[fb.t_axis] * fb.t_sign;
    *u = 0.5 * (s / ma + 1.0);
    *v = 0.5 * (t / ma + 1.0);
    Vec3 ds(0, 0, 0), dt(0, 0, 0), dm(0, 0, 0);
    ds[fb.s_axis] = fb.s_sign;
    dt[fb.t_axis] = fb.t_sign;
    dm[fb.major] = fb.msign;
    *du_dw = (ds * ma - dm * s) * (0.5 / (ma * ma));
    *dv_dw = (dt * ma - dm * t) * (0.5 / (ma * ma));
    return f;
}

Vec3 face_uv_to_dir(int face, double u, double v) {
    const FaceBasis& fb = kFaces[face];
    double a = 2.0 * u - 1.0;
    double b = 2.0 * v - 1.0;
    Vec3 w(0, 0, 0);
    w[fb.major] = fb.msign;
    w[fb.s_axis] = a * fb.s_sign;
    w[fb.t_axis] = b * fb.t_sign;
    return normalize(w);
}

Vec3 texel_center_dir(int face, int res, int x, int y) {
    return face_uv_to_dir(face, (x + 0.5) / res, (y + 0.5) / res);
}

namespace {
// Projected solid-angle antiderivative for a cube face.
inline double angular_extent(double x, double y) { return std::atan2(x * y, std::sqrt(x * x + y * y + 1.0)); }
}  // namespace

double texel_solid_angle(int res, int x, int y) {
    double x0 = 2.0 * x / res - 1.0;
    double x1 = 2.0 * (x + 1) / res - 1.0;
    double y0 = 2.0 * y / res - 1.0;
    double y1 = 2.0 * (y + 1) / res - 1.0;
    return angular_extent(x1, y1) - angular_extent(x0, y1) - angular_extent(x1, y0) + angular_extent(x0, y0);
}

TexelCoord dir_to_texel(const Vec3& w, int res) {
    double u, v;
    TexelCoord tc;
    tc.face = dir_to_face_uv(w, &u, &v);
    tc.x = std::clamp(static_cast<int>(u * res), 0, res - 1);
    tc.y = std::clamp(static_cast<int>(v * res), 0, res - 1);
    return tc;
}

EnvironmentMap::EnvironmentMap(int base_resolution) {
    if (base_resolution < 8 || (base_resolution & (base_resolution - 1)) != 0)
        throw std::runtime_error("envmap: base resolution must be a power of two >= 8");
    base_resolution_ = base_resolution;
    levels_ = 1;
    for (int r = base_resolution; r > 8; r >>= 1) ++levels_;
    mips_.resize(levels_);
    for (int k = 0; k < levels_; ++k) {
        int res = resolution_at(k);
        for (int f = 0; f < 6; ++f) mips_[k][f] = Image(res, res, 3);
    }
}

double EnvironmentMap::roughness_at(int level) const {
    if (levels_ <= 1) return 1.0;
    return kRoughnessMin + (1.0 - kRoughnessMin) * level / (levels_ - 1);
}

Vec3 EnvironmentMap::radiance(const Vec3& w) const {
    TexelCoord tc = dir_to_texel(w, base_resolution_);
    const Image& img = mips_[0][tc.face];
    return {img.at(tc.x, tc.y, 0), img.at(tc.x, tc.y, 1), img.at(tc.x, tc.y, 2)};
}

int64_t EnvironmentMap::texel_index(int level, int face, int x, int y) const {
    int res = resolution_at(level);
    return (static_cast<int64_t>(face) * res + y) * res + x;
}

int prefilter_samples_for_resolution(int res) {
    double scaled = 1024.0 * (8.0 / res) * (8.0 / res);
    return std::max(64, static_cast<int>(scaled));
}

void prefilter_taps(const EnvironmentMap& env, int level, int face, int x, int y, std::vector<PrefilterTap>& taps) {
    taps.clear();
    int res = env.resolution_at(level);
    int base = env.base_resolution();
    double rough = env.roughness_at(level);
    Vec3 n = texel_center_dir(face, res, x, y);
    int samples = prefilter_samples_for_resolution(res);
    uint64_t scramble = hash_combine(hash_combine(static_cast<uint64_t>(level), static_cast<uint64_t>(face)),
                                     hash_combine(static_cast<uint64_t>(x), static_cast<uint64_t>(y)));
    double wsum = 0.0;
    for (int j = 0; j < samples; ++j) {
        double u1, u2;
        hammersley2d(static_cast<uint32_t>(j), static_cast<uint32_t>(samples), scramble, &u1, &u2);
        NdfSample s = sample_ndf(n, n, rough, u1, u2);
        double w = dot(s.wi, n);
        if (w <= 0.0) continue;
        TexelCoord tc = dir_to_texel(s.wi, base);
        taps.push_back({env.texel_index(0, tc.face, tc.x, tc.y), w});
        wsum += w;
    }
    if (taps.empty()) {
        // Degenerate corner; fall back to the texel under n itself.
        TexelCoord tc = dir_to_texel(n, base);
        taps.push_back({env.texel_index(0, tc.face, tc.x, tc.y), 1.0});
        wsum = 1.0;
    }
    for (PrefilterTap& t : taps) t.weight /= wsum;
}

void prefilter_envmap(EnvironmentMap& env) {
    // Level 0 is the raw radiance itself.
    for (int k = 1; k < env.levels(); ++k) {
        int res = env.resolution_at(k);
        parallel_ranges(6LL * res * res, [&](int, int64_t begin, int64_t end) {
            std::vector<PrefilterTap> taps;
            for (int64_t i = begin; i < end; ++i) {
                int face = static_cast<int>(i / (static_cast<int64_t>(res) * res));
                int rem = static_cast<int>(i % (static_cast<int64_t>(res) * res));
                int y = rem / res;
                int x = rem % res;
                prefilter_taps(env, k, face, x, y, taps);
                Vec3 acc(0, 0, 0);
                int base = env.base_resolution();
                for (const PrefilterTap& t : taps) {
                    int f0 = static_cast<int>(t.texel / (static_cast<int64_t>(base) * base));
                    int r0 = static_cast<int>(t.texel % (static_cast<int64_t>(base) * base));
                    const Image& img = env.face(0, f0);
                    int ty = r0 / base, tx = r0 % base;
                    acc += Vec3(img.at(tx, ty, 0), img.at(tx, ty, 1), img.at(tx, ty, 2)) * t.weight;
                }
                Image& out = env.face(k, face);
                out.at(x, y, 0) = acc.x;
                out.at(x, y, 1) = acc.y;
                out.at(x, y, 2) = acc.z;
            }
        });
    }
    env.pyramid_built_ = true;
}

namespace {

// Continuous mip coordinate for a roughness value.
double level_coord(const EnvironmentMap& env, double roughness, double* dl_dr) {
    double span = 1.0 - kRoughnessMin;
    double t = (roughness - kRoughnessMin) / span;
    double l = t * (env.levels() - 1);
    double lo = 0.0, hi = static_cast<double>(env.levels() - 1);
    if (dl_dr) *dl_dr = (l > lo && l < hi) ? (env.levels() - 1) / span : 0.0;
    return std::clamp(l, lo, hi);
}

}  // namespace

Vec3 lookup_prefiltered(const EnvironmentMap& env, const Vec3& wr, double roughness) {
    if (!env.pyramid_built()) throw std::runtime_error("envmap: pyramid not built");
    double l = level_coord(env, roughness, nullptr);
    int k0 = std::min(static_cast<int>(l), env.levels() - 1);
    int k1 = std::min(k0 + 1, env.levels() - 1);
    double frac = l - k0;
    double u, v;
    int face = dir_to_face_uv(wr, &u, &v);
    Vec3 out(0, 0, 0);
    double lw[2] = {1.0 - frac, frac};
    int ks[2] = {k0, k1};
    for (int s = 0; s < (k0 == k1 ? 1 : 2); ++s) {
        double c[3];
        sample_bilinear(env.face(ks[s], face), u, v, c);
        double w = k0 == k1 ? 1.0 : lw[s];
        out += Vec3(c[0], c[1], c[2]) * w;
    }
    return out;
}

PrefilteredLookup lookup_prefiltered_grad(const EnvironmentMap& env, const Vec3& wr, double roughness) {
    if (!env.pyramid_built()) throw std::runtime_error("envmap: pyramid not built");
    PrefilteredLookup out;
    double dl_dr;
    double l = level_coord(env, roughness, &dl_dr);
    int k0 = std::min(static_cast<int>(l), env.levels() - 1);
    int k1 = std::min(k0 + 1, env.levels() - 1);
    double frac = l - k0;
    double u, v;
    Vec3 du_dw, dv_dw;
    int face = dir_to_face_uv_grad(wr, &u, &v, &du_dw, &dv_dw);

    Vec3 level_value[2];
    int ks[2] = {k0, k1};
    double lw[2] = {k0 == k1 ? 1.0 : 1.0 - frac, k0 == k1 ? 0.0 : frac};
    out.tap_count = k0 == k1 ? 1 : 2;
    for (int s = 0; s < out.tap_count; ++s) {
        const Image& img = env.face(ks[s], face);
        double c[3], dc_du[3], dc_dv[3];
        sample_bilinear(img, u, v, c, dc_du, dc_dv);
        level_value[s] = Vec3(c[0], c[1], c[2]);
        BilinearFootprint fp = bilinear_footprint(img, u, v);
        auto& tap = out.taps[s];
        tap.level = ks[s];
        tap.face = face;
        tap.level_weight = lw[s];
        for (int q = 0; q < 4; ++q) {
            tap.x[q] = fp.x[q];
            tap.y[q] = fp.y[q];
            tap.w[q] = fp.w[q];
        }
        out.value += level_value[s] * lw[s];
        for (int c3 = 0; c3 < 3; ++c3) out.dvalue_dwr[c3] += (du_dw * dc_du[c3] + dv_dw * dc_dv[c3]) * lw[s];
    }
    out.dvalue_dr = out.tap_count == 2 ? (level_value[1] - level_value[0]) * dl_dr : Vec3(0, 0, 0);
    return out;
}

LightSampler::LightSampler(const EnvironmentMap& env) {
    res_ = env.base_resolution();
    int64_t count = env.texel_count(0);
    luminance_.assign(count, 0.0);
    cdf_.assign(count, 0.0);
    double acc = 0.0;
    for (int f = 0; f < 6; ++f) {
        const Image& img = env.face(0, f);
        for (int y = 0; y < res_; ++y)
            for (int x = 0; x < res_; ++x) {
                int64_t i = env.texel_index(0, f, x, y);
                double lum = std::max(0.0, rgb_luminance({img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)}));
                luminance_[i] = lum;
                acc += lum * texel_solid_angle(res_, x, y);
                cdf_[i] = acc;
            }
    }
    total_ = acc;
    uniform_ = !(acc > 0.0);
    if (!uniform_)
        for (double& c : cdf_) c /= acc;
}

LightSample LightSampler::sample(const EnvironmentMap& env, double u_select, double u_jitter1,
                                 double u_jitter2) const {
    LightSample out;
    if (uniform_) {
        double z = 1.0 - 2.0 * u_jitter1;
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = 2.0 * kPi * u_jitter2;
        out.direction = Vec3(s * std::cos(phi), s * std::sin(phi), z);
        out.pdf = 1.0 / (4.0 * kPi);
        out.radiance = env.radiance(out.direction);
        TexelCoord tc = dir_to_texel(out.direction, env.base_resolution());
        out.texel = env.texel_index(0, tc.face, tc.x, tc.y);
        return out;
    }
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u_select);
    int64_t idx = std::min<int64_t>(it - cdf_.begin(), static_cast<int64_t>(cdf_.size()) - 1);

    int face = static_cast<int>(idx / (static_cast<int64_t>(res_) * res_));
    int rem = static_cast<int>(idx % (static_cast<int64_t>(res_) * res_));
    int y = rem / res_;
    int x = rem % res_;
    double ju = std::min(u_jitter1, 1.0 - 1e-12);
    out.direction = face_uv_to_dir(face, (x + ju) / res_, (y + u_jitter2) / res_);
    out.pdf = luminance_[idx] / total_;
    const Image& img = env.face(0, face);
    out.radiance = Vec3(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
    out.texel = idx;
    return out;
}

double LightSampler::pdf(const Vec3& w) const {
    if (uniform_) return 1.0 / (4.0 * kPi);
    TexelCoord tc = dir_to_texel(w, res_);
    int64_t idx = (static_cast<int64_t>(tc.face) * res_ + tc.y) * res_ + tc.x;
    return luminance_[idx] / total_;
}

void write_environment(const std::string& dir, const EnvironmentMap& env) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (int f = 0; f < 6; ++f)
        write_pfm(dir + "/" + kCubeFaceNames[f] + ".pfm", env.face(0, f));
    nlohmann::json desc;
    desc["resolution"] = env.base_resolution();
    desc["color_space"] = "linear_rgb";
    desc["faces"] = nlohmann::json::object();
    for (int f = 0; f < 6; ++f) desc["faces"][kCubeFaceNames[f]] = std::string(kCubeFaceNames[f]) + ".pfm";
    std::ofstream out(dir + "/descriptor.json");
    out << desc.dump(2) << "\n";
    if (!out) throw std::runtime_error("envmap: cannot write descriptor in " + dir);
}

EnvironmentMap read_environment(const std::string& descriptor_or_dir) {
    namespace fs = std::filesystem;
    fs::path p(descriptor_or_dir);
    if (fs::is_directory(p)) p /= "descriptor.json";
    std::ifstream in(p);
    if (!in) throw std::runtime_error("envmap: cannot open " + p.string());
    nlohmann::json desc = nlohmann::json::parse(in);
    int res = desc.at("resolution").get<int>();
    EnvironmentMap env(res);
    fs::path base = p.parent_path();
    for (int f = 0; f < 6; ++f) {
        std::string rel = desc.at("faces").at(kCubeFaceNames[f]).get<std::string>();
        Image img = read_pfm((base / rel).string());
        if (img.width != res || img.height != res || img.channels != 3)
            throw std::runtime_error("envmap: face " + rel + " does not match descriptor resolution");
        env.face(0, f) = std::move(img);
    }
    return env;
}

}  // namespace occlurend
