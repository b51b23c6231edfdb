#include "occlurend/brdf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "occlurend/image.hpp"
#include "occlurend/parallel.hpp"
#include "occlurend/rng.hpp"

namespace occlurend {

double beckmann_d_cos(double cos_theta_h, double roughness) {
    if (cos_theta_h <= 0.0) return 0.0;
    double r = std::clamp(roughness, kRoughnessMin, 1.0);
    double c2 = cos_theta_h * cos_theta_h;
    double r2 = r * r;
    return std::exp((c2 - 1.0) / (r2 * c2)) / (kPi * r2 * c2 * c2);
}

double beckmann_d(const Vec3& n, const Vec3& h, double roughness) {
    return beckmann_d_cos(dot(n, h), roughness);
}

double kelemen_specular_eval(const Vec3& wi, const Vec3& wo, const Vec3& n, const SpecularParams& p) {
    double cos_i = dot(wi, n);
    double cos_o = dot(wo, n);
    if (cos_i <= 0.0 || cos_o <= 0.0) return 0.0;
    Vec3 h = wi + wo;
    double hlen = length(h);
    if (hlen <= 0.0) return 0.0;  // wi == -wo, grazing degenerate
    h = h / hlen;
    double d = beckmann_d(n, h, p.roughness);
    // h . wo == |wi + wo| / 2; this form is bitwise symmetric in (wi, wo),
    // which keeps reciprocity exact.
    double cos_oh = std::min(0.5 * hlen, 1.0);
    double fresnel = p.f0 + (1.0 - p.f0) * std::pow(1.0 - cos_oh, 5.0);
    // Kelemen: G / (4 cos_i cos_o) collapses to 1 / (2 (1 + wi.wo)).
    return p.intensity * d * fresnel / (2.0 * (1.0 + dot(wi, wo)));
}

NdfSample sample_ndf(const Vec3& n, const Vec3& wo, double roughness, double u1, double u2) {
    double r = std::clamp(roughness, kRoughnessMin, 1.0);
    double tan2 = -r * r * std::log(1.0 - u1);
    double cos_h = 1.0 / std::sqrt(1.0 + tan2);
    double sin_h = std::sqrt(std::max(0.0, 1.0 - cos_h * cos_h));
    double phi = 2.0 * kPi * u2;
    Onb frame(n);
    Vec3 h = frame.to_world(Vec3(sin_h * std::cos(phi), sin_h * std::sin(phi), cos_h));
    NdfSample s;
    s.h = h;
    double cos_oh = dot(wo, h);
    s.wi = reflect(wo, h);
    s.valid = dot(s.wi, n) > 0.0 && cos_oh > 0.0;
    s.pdf = cos_oh > 0.0 ? beckmann_d_cos(cos_h, r) * cos_h / (4.0 * cos_oh) : 0.0;
    return s;
}

void BrdfLut::lookup(double cos_theta, double roughness, double* out_scale, double* out_bias, double* dscale_dcos,
                     double* dbias_dcos, double* dscale_dr, double* dbias_dr) const {
    const int n = kResolution;
    double cell_c = (1.0 - kCosMin) / n;
    double cell_r = (1.0 - kRoughnessMin) / n;
    double fc = (cos_theta - kCosMin) / cell_c - 0.5;
    double fr = (roughness - kRoughnessMin) / cell_r - 0.5;
    bool live_c = fc > 0.0 && fc < n - 1;
    bool live_r = fr > 0.0 && fr < n - 1;
    fc = std::clamp(fc, 0.0, static_cast<double>(n - 1));
    fr = std::clamp(fr, 0.0, static_cast<double>(n - 1));
    int c0 = std::min(static_cast<int>(fc), n - 2);
    int r0 = std::min(static_cast<int>(fr), n - 2);
    double ac = fc - c0;
    double ar = fr - r0;
    auto cell = [&](const std::vector<double>& tab, int ci, int ri) { return tab[static_cast<size_t>(ri) * n + ci]; };
    auto blerp = [&](const std::vector<double>& tab, double* out, double* d_dc, double* d_dr) {
        double v00 = cell(tab, c0, r0), v10 = cell(tab, c0 + 1, r0);
        double v01 = cell(tab, c0, r0 + 1), v11 = cell(tab, c0 + 1, r0 + 1);
        double lo = v00 + (v10 - v00) * ac;
        double hi = v01 + (v11 - v01) * ac;
        *out = lo + (hi - lo) * ar;
        if (d_dc) *d_dc = live_c ? ((v10 - v00) * (1 - ar) + (v11 - v01) * ar) / cell_c : 0.0;
        if (d_dr) *d_dr = live_r ? (hi - lo) / cell_r : 0.0;
    };
    blerp(scale, out_scale, dscale_dcos, dscale_dr);
    blerp(bias, out_bias, dbias_dcos, dbias_dr);
}

BrdfLut precompute_brdf_lut(int samples_per_cell, uint64_t seed) {
    BrdfLut lut;
    const int n = BrdfLut::kResolution;
    lut.scale.assign(static_cast<size_t>(n) * n, 0.0);
    lut.bias.assign(static_cast<size_t>(n) * n, 0.0);
    parallel_ranges(static_cast<int64_t>(n) * n, [&](int, int64_t begin, int64_t end) {
        for (int64_t cellidx = begin; cellidx < end; ++cellidx) {
            int ci = static_cast<int>(cellidx % n);
            int ri = static_cast<int>(cellidx / n);
            double cos_o = BrdfLut::cos_at(ci);
            double rough = BrdfLut::rough_at(ri);
            Vec3 normal(0, 0, 1);
            Vec3 wo(std::sqrt(std::max(0.0, 1.0 - cos_o * cos_o)), 0.0, cos_o);
            uint64_t scramble = hash_combine(seed, static_cast<uint64_t>(cellidx));
            double sum_scale = 0.0, sum_bias = 0.0;
            for (int j = 0; j < samples_per_cell; ++j) {
                double u1, u2;
                hammersley2d(static_cast<uint32_t>(j), static_cast<uint32_t>(samples_per_cell), scramble, &u1, &u2);
                NdfSample s = sample_ndf(normal, wo, rough, u1, u2);
                if (!s.valid) continue;
                double cos_i = dot(s.wi, normal);
                double cos_oh = dot(wo, s.h);
                double cos_nh = dot(normal, s.h);
                if (cos_nh <= 0.0 || cos_oh <= 0.0) continue;
                // fs / F * cos_i / pdf with the Beckmann D cancelled.
                double w = 2.0 * cos_i * cos_oh / ((1.0 + dot(s.wi, wo)) * cos_nh);
                double fc = std::pow(1.0 - cos_oh, 5.0);
                sum_scale += w * (1.0 - fc);
                sum_bias += w * fc;
            }
            lut.scale[cellidx] = sum_scale / samples_per_cell;
            lut.bias[cellidx] = sum_bias / samples_per_cell;
        }
    });
    return lut;
}

void write_brdf_lut(const std::string& path, const BrdfLut& lut) {
    const int n = BrdfLut::kResolution;
    Image img(n, n, 3);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            img.at(x, y, 0) = lut.scale[static_cast<size_t>(y) * n + x];
            img.at(x, y, 1) = lut.bias[static_cast<size_t>(y) * n + x];
        }
    write_pfm(path, img);
}

BrdfLut read_brdf_lut(const std::string& path) {
    Image img = read_pfm(path);
    const int n = BrdfLut::kResolution;
    if (img.width != n || img.height != n || img.channels != 3) throw std::runtime_error("brdf lut: unexpected shape in " + path);
    BrdfLut lut;
    lut.scale.resize(static_cast<size_t>(n) * n);
    lut.bias.resize(static_cast<size_t>(n) * n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            lut.scale[static_cast<size_t>(y) * n + x] = img.at(x, y, 0);
            lut.bias[static_cast<size_t>(y) * n + x] = img.at(x, y, 1);
        }
    return lut;
}

}  // namespace occlurend
