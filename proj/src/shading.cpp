#include "occlurend/shading.hpp"

#include <algorithm>
#include <cmath>

namespace occlurend {

int trace_visibility(const ShadeContext& ctx, const Vec3& x, const Vec3& geom_n, const Vec3& w) {
    Vec3 x_m = ctx.model_from_world.apply_point(x);
    Vec3 w_m = ctx.model_from_world.apply_vector(w);
    Vec3 n_m = ctx.model_from_world.apply_vector(geom_n);
    return occlusion_query(*ctx.bvh, *ctx.mesh, x_m, w_m, n_m, ctx.occlusion_eps);
}

double estimate_specular_visibility(const ShadeContext& ctx, const ShadePoint& point, const SampleBudget& budget,
                                    Pcg32& rng) {
    if (!ctx.visibility_enabled) return 1.0;
    double cos_o = dot(point.wo, point.normal);
    if (cos_o <= 0.0) return 0.0;
    Vec3 wr = reflect(point.wo, point.normal);
    double r = point.spec.roughness;
    if (r <= kRoughnessMin + 1e-9) {
        // Mirror limit: a single reflected ray decides.
        return trace_visibility(ctx, point.position, point.geom_normal, wr);
    }
    int num = 0;
    double acc = 0.0, wsum = 0.0;
    for (int k = 0; k < budget.n_vis; ++k) {
        double u1 = rng.next_double();
        double u2 = rng.next_double();
        NdfSample s = sample_ndf(point.normal, point.wo, r, u1, u2);
        if (!s.valid) continue;
        int v = trace_visibility(ctx, point.position, point.geom_normal, s.wi);
        if (ctx.visibility_as_printed) {
            // Eq. as printed: per-sample division by D. Estimates the
            // unoccluded measure, not a [0,1] fraction; kept for comparison.
            double d = beckmann_d(point.normal, s.h, r);
            acc += v / std::max(d, 1e-12);
            wsum += 1.0;
        } else {
            acc += v;
            wsum += 1.0;
        }
        ++num;
    }
    if (num == 0) return 0.0;
    return ctx.visibility_as_printed ? acc / budget.n_vis : acc / wsum;
}

Vec3 shade_diffuse(const ShadeContext& ctx, const ShadePoint& point, const SampleBudget& budget, Pcg32& rng,
                   std::vector<DiffuseSampleRecord>* log) {
    const Vec3& n = point.normal;
    Onb frame(n);
    Vec3 sum(0, 0, 0);
    auto accumulate = [&](const Vec3& w, const Vec3& radiance, int64_t texel, double p_light, bool from_light) {
        double cos_n = dot(w, n);
        if (cos_n <= 0.0) return;
        double p_cos = cos_n / kPi;
        double denom = budget.n_light * p_light + budget.n_brdf * p_cos;
        if (denom <= 0.0) return;
        int visible = trace_visibility(ctx, point.position, point.geom_normal, w);
        if (log) log->push_back({w, radiance, texel, p_light, cos_n, denom, visible, from_light});
        if (visible) sum += radiance * (cos_n / denom);
    };

    // Scrambled Hammersley sample sets per strategy (selection stratified,
    // jitter axes on radical inverses). The point sets are part of the
    // procedure, so matched seeds stay matched.
    {
        double cp0 = rng.next_double(), cp2 = rng.next_double();
        uint32_t scr1 = rng.next_u32();
        for (int j = 0; j < budget.n_light; ++j) {
            double u_select = (j + cp0) / budget.n_light;
            double uj1 = radical_inverse_scrambled(static_cast<uint32_t>(j), scr1);
            double uj2 = fract(radical_inverse_base3(static_cast<uint32_t>(j)) + cp2);
            LightSample ls = ctx.sampler->sample(*ctx.env, u_select, uj1, uj2);
            accumulate(ls.direction, ls.radiance, ls.texel, ls.pdf, true);
        }
    }
    double cp0 = rng.next_double();
    uint32_t scr1 = rng.next_u32();
    for (int j = 0; j < budget.n_brdf; ++j) {
        double u1 = (j + cp0) / budget.n_brdf;
        double u2 = radical_inverse_scrambled(static_cast<uint32_t>(j), scr1);
        double z = std::sqrt(std::max(0.0, 1.0 - u1));
        double s = std::sqrt(u1);
        double phi = 2.0 * kPi * u2;
        Vec3 w = frame.to_world(Vec3(s * std::cos(phi), s * std::sin(phi), z));
        Vec3 radiance = ctx.env->radiance(w);
        int64_t texel = -1;
        {
            TexelCoord tc = dir_to_texel(w, ctx.env->base_resolution());
            texel = ctx.env->texel_index(0, tc.face, tc.x, tc.y);
        }
        accumulate(w, radiance, texel, ctx.sampler->pdf(w), false);
    }
    return lambert_eval(point.albedo) * sum;
}

Vec3 shade_specular(const ShadeContext& ctx, const ShadePoint& point, double vis_tilde) {
    double cos_o = dot(point.wo, point.normal);
    if (cos_o <= 0.0) return Vec3(0, 0, 0);
    Vec3 wr = reflect(point.wo, point.normal);
    double scale, bias;
    ctx.lut->lookup(cos_o, point.spec.roughness, &scale, &bias);
    Vec3 pre = lookup_prefiltered(*ctx.env, wr, point.spec.roughness);
    double brdf_term = point.spec.intensity * (scale * point.spec.f0 + bias);
    return pre * (brdf_term * vis_tilde);
}

ShadeResult shade(const ShadeContext& ctx, const ShadePoint& point, const SampleBudget& budget, Pcg32& rng,
                  std::vector<DiffuseSampleRecord>* diffuse_log) {
    ShadeResult out;
    if (dot(point.wo, point.normal) <= 0.0) {
        out.vis_tilde = 0.0;
        return out;  // grazing or back-facing interpolated normal
    }
    out.diffuse = shade_diffuse(ctx, point, budget, rng, diffuse_log);
    out.vis_tilde = estimate_specular_visibility(ctx, point, budget, rng);
    out.specular = shade_specular(ctx, point, out.vis_tilde);
    out.color = out.diffuse + out.specular;
    return out;
}

}  // namespace occlurend
