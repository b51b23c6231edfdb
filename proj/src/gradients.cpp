#include "occlurend/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "occlurend/parallel.hpp"
#include "occlurend/rng.hpp"

namespace occlurend {

void OptimContext::init(Scene& s, const LossWeights& w, const SampleBudget& b, uint64_t seed_, bool visibility) {
    scene = &s;
    weights = w;
    budget = b;
    seed = seed_;
    visibility_enabled = visibility;
    laplacian = build_uniform_laplacian(s.mesh);
    v_init = s.mesh.vertices;
    geometry_synced = false;
    env_synced = false;
}

void sync_state(OptimContext& ctx, const OptimParameters& params) {
    decode_parameters(params, *ctx.scene);
    if (!(ctx.assume_geometry_constant && ctx.geometry_synced)) {
        compute_vertex_normals(ctx.scene->mesh);
        ctx.pipeline.build(*ctx.scene);
        ctx.geometry_synced = true;
    }
    if (!(ctx.assume_env_constant && ctx.env_synced)) {
        prefilter_envmap(ctx.scene->env);
        ctx.env_synced = true;
    }
}

namespace {

// Per-worker gradient accumulation; merged in worker order so the reduction
// order is independent of thread timing.
struct WorkerBuf {
    std::vector<Vec3> d_vertices;
    std::vector<Vec3> d_vertex_normals;  // adjoints of the unit vertex normals
    std::vector<double> d_albedo;        // value space
    std::vector<double> d_intensity;
    std::vector<double> d_roughness;
    std::vector<double> d_env0;                   // mip-0 radiance
    std::vector<std::vector<double>> d_pyramid;   // per level, radiance
    std::vector<double> d_lum;                    // per mip-0 texel luminance
    double z_adj = 0.0;                           // adjoint of the sampler normalizer
    double image_abs = 0.0;                       // partial loss sums
    double diffuse_sq = 0.0;

    void init(const Scene& scene) {
        d_vertices.assign(scene.mesh.vertex_count(), Vec3(0, 0, 0));
        d_vertex_normals.assign(scene.mesh.vertex_count(), Vec3(0, 0, 0));
        d_albedo.assign(scene.textures.albedo.data.size(), 0.0);
        d_intensity.assign(scene.textures.intensity.data.size(), 0.0);
        d_roughness.assign(scene.textures.roughness.data.size(), 0.0);
        d_env0.assign(scene.env.texel_count(0) * 3, 0.0);
        d_pyramid.resize(scene.env.levels());
        for (int k = 0; k < scene.env.levels(); ++k) d_pyramid[k].assign(scene.env.texel_count(k) * 3, 0.0);
        d_lum.assign(scene.env.texel_count(0), 0.0);
    }
};

struct PassResult {
    LossBreakdown loss;
    std::vector<RenderOutput> renders;
};

// Shared forward (and optional fused backward) over a batch of frames.
PassResult run_pass(OptimContext& ctx, const OptimParameters& params, const std::vector<int>& frame_indices,
                    uint64_t iteration, bool with_grads, GradientSet* grads_out) {
    Scene& scene = *ctx.scene;
    const Camera& cam = scene.camera;
    int w = cam.width, h = cam.height;
    int64_t npix = static_cast<int64_t>(w) * h;
    int nworkers = std::max(1, static_cast<int>(std::min<int64_t>(worker_count(), npix)));

    PassResult out;
    out.renders.resize(frame_indices.size());

    LightSampler sampler(scene.env);

    // Coverage prepass: fixes the data-term and diffuse-regularizer
    // normalizers before any adjoint is formed.
    int64_t covered_total = 0;
    double image_weight_total = 0.0;
    double mask_loss_acc = 0.0;
    for (size_t bi = 0; bi < frame_indices.size(); ++bi) {
        const Frame& frame = scene.frames[frame_indices[bi]];
        Image mask = render_mask(ctx.pipeline, frame);
        for (double v : mask.data) covered_total += v > 0.0 ? 1 : 0;
        if (ctx.image_loss_masked && frame.target && frame.mask) {
            for (double v : frame.mask->data) image_weight_total += 3.0 * v;
        } else if (frame.target) {
            image_weight_total += 3.0 * npix;
        }
        if (frame.mask) mask_loss_acc += loss_mask(mask, *frame.mask);
        out.renders[bi].mask = std::move(mask);
    }
    double mask_loss = frame_indices.empty() ? 0.0 : mask_loss_acc / frame_indices.size();

    std::vector<WorkerBuf> bufs;
    if (with_grads) {
        bufs.resize(nworkers);
        for (auto& b : bufs) b.init(scene);
    } else {
        bufs.resize(nworkers);  // loss partials only
    }

    for (size_t bi = 0; bi < frame_indices.size(); ++bi) {
        const Frame& frame = scene.frames[frame_indices[bi]];
        RenderOutput& render = out.renders[bi];
        render.color = Image(w, h, 3);
        render.diffuse = Image(w, h, 3);
        render.specular = Image(w, h, 3);
        render.hits.assign(npix, HitRecord{});

        ShadeContext sctx;
        sctx.mesh = &scene.mesh;
        sctx.bvh = &ctx.pipeline.bvh;
        sctx.env = &scene.env;
        sctx.sampler = &sampler;
        sctx.lut = &ctx.pipeline.lut;
        sctx.world_from_model = frame.model_to_world;
        sctx.model_from_world = frame.model_to_world.inverse();
        sctx.occlusion_eps = scene.occlusion_eps();
        sctx.visibility_enabled = ctx.visibility_enabled;
        RigidTransform world_rot = frame.model_to_world;

        parallel_ranges(npix, [&](int worker, int64_t begin, int64_t end) {
            WorkerBuf& buf = bufs[worker];
            std::vector<DiffuseSampleRecord> log;
            for (int64_t idx = begin; idx < end; ++idx) {
                int px = static_cast<int>(idx % w);
                int py = static_cast<int>(idx / w);
                SurfacePoint sp = trace_surface(scene, ctx.pipeline.bvh, frame, px, py);
                if (!sp.hit) continue;
                render.hits[idx] = HitRecord{sp.face, sp.b1, sp.b2, sp.uv};
                MaterialSample mat = sample_material(scene.textures, sp.uv);
                ShadePoint point = make_shade_point(scene, sp, mat);
                Pcg32 rng = make_pixel_rng(ctx.seed, static_cast<uint64_t>(frame.id), static_cast<uint64_t>(idx),
                                           iteration, 0);
                log.clear();
                ShadeResult res = shade(sctx, point, ctx.budget, rng, with_grads ? &log : nullptr);
                for (int c = 0; c < 3; ++c) {
                    render.color.at(px, py, c) = res.color[c];
                    render.diffuse.at(px, py, c) = res.diffuse[c];
                    render.specular.at(px, py, c) = res.specular[c];
                }

                double pix_w = 1.0;
                if (ctx.image_loss_masked && frame.mask) pix_w = frame.mask->at(px, py, 0);
                if (frame.target)
                    for (int c = 0; c < 3; ++c)
                        buf.image_abs += pix_w * std::fabs(res.color[c] - frame.target->at(px, py, c));
                for (int c = 0; c < 3; ++c) buf.diffuse_sq += res.diffuse[c] * res.diffuse[c];

                if (!with_grads) continue;
                double cos_o = dot(point.wo, point.normal);
                if (cos_o <= 0.0) continue;  // shade() returned zero; nothing to differentiate

                // Pixel adjoints: L1 data term plus the diffuse regularizer.
                Vec3 adj_color(0, 0, 0);
                if (frame.target && image_weight_total > 0.0) {
                    for (int c = 0; c < 3; ++c) {
                        double d = res.color[c] - frame.target->at(px, py, c);
                        adj_color[c] = pix_w * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / image_weight_total;
                    }
                }
                Vec3 adj_diffuse = adj_color;
                Vec3 adj_specular = adj_color;
                if (covered_total > 0)
                    for (int c = 0; c < 3; ++c)
                        adj_diffuse[c] += ctx.weights.diffuse * 2.0 * res.diffuse[c] / (covered_total * 3.0);

                Vec3 adj_n(0, 0, 0);   // world-space shading normal adjoint
                Vec3 adj_wo(0, 0, 0);
                Vec2 adj_uv(0, 0);
                double adj_roughness = 0.0;

                // ---- Specular backward ----
                if (res.vis_tilde > 0.0) {
                    double scale, bias, ds_dc, db_dc, ds_dr, db_dr;
                    ctx.pipeline.lut.lookup(cos_o, point.spec.roughness, &scale, &bias, &ds_dc, &db_dc, &ds_dr, &db_dr);
                    PrefilteredLookup pre = lookup_prefiltered_grad(scene.env, reflect(point.wo, point.normal),
                                                                    point.spec.roughness);
                    double brdf_term = point.spec.intensity * (scale * point.spec.f0 + bias);
                    double gate = brdf_term * res.vis_tilde;
                    Vec3 adj_pre = adj_specular * gate;
                    double adj_brdf_term = res.vis_tilde * dot(adj_specular, pre.value);
                    double adj_intensity_val = adj_brdf_term * (scale * point.spec.f0 + bias);
                    double adj_scale = adj_brdf_term * point.spec.intensity * point.spec.f0;
                    double adj_bias = adj_brdf_term * point.spec.intensity;
                    double adj_cos_o = adj_scale * ds_dc + adj_bias * db_dc;
                    adj_roughness += adj_scale * ds_dr + adj_bias * db_dr + dot(adj_pre, pre.dvalue_dr);

                    // Pyramid scatter.
                    for (int s = 0; s < pre.tap_count; ++s) {
                        const auto& tap = pre.taps[s];
                        int res_k = scene.env.resolution_at(tap.level);
                        for (int q = 0; q < 4; ++q) {
                            int64_t ti = (static_cast<int64_t>(tap.face) * res_k + tap.y[q]) * res_k + tap.x[q];
                            double ww = tap.level_weight * tap.w[q];
                            for (int c = 0; c < 3; ++c) buf.d_pyramid[tap.level][ti * 3 + c] += adj_pre[c] * ww;
                        }
                    }
                    // Reflected-direction chain.
                    Vec3 adj_wr(0, 0, 0);
                    for (int c = 0; c < 3; ++c) adj_wr += pre.dvalue_dwr[c] * adj_pre[c];
                    adj_n += adj_wr * (2.0 * cos_o) + point.wo * (2.0 * dot(adj_wr, point.normal));
                    adj_wo += point.normal * (2.0 * dot(adj_wr, point.normal)) - adj_wr;
                    adj_n += point.wo * adj_cos_o;
                    adj_wo += point.normal * adj_cos_o;

                    double dint = adj_intensity_val;
                    BilinearFootprint fp = bilinear_footprint(scene.textures.intensity, sp.uv.x, sp.uv.y);
                    for (int q = 0; q < 4; ++q)
                        buf.d_intensity[static_cast<size_t>(fp.y[q]) * scene.textures.intensity.width + fp.x[q]] +=
                            dint * fp.w[q];
                    adj_uv.x += dint * mat.dintensity_du;
                    adj_uv.y += dint * mat.dintensity_dv;
                }

                // ---- Diffuse backward ----
                Vec3 k = adj_diffuse * (1.0 / kPi) * point.albedo;  // per-channel t_c
                Vec3 sum_s(0, 0, 0);                                // S_c for the albedo chain
                double n_l = ctx.budget.n_light, n_c = ctx.budget.n_brdf;
                for (const DiffuseSampleRecord& rec : log) {
                    if (!rec.visible) continue;
                    double inv_denom = 1.0 / rec.denom;
                    sum_s += rec.radiance * (rec.cos_n * inv_denom);
                    // Radiance scatter (env gradient path stays valid even
                    // under the uniform fallback; the texel is the one the
                    // direction lands in).
                    if (rec.texel >= 0)
                        for (int c = 0; c < 3; ++c)
                            buf.d_env0[rec.texel * 3 + c] += k[c] * rec.cos_n * inv_denom;
                    double kl = k.x * rec.radiance.x + k.y * rec.radiance.y + k.z * rec.radiance.z;
                    // Light-pdf chain through luminance and the normalizer.
                    if (!sampler.uniform_fallback() && rec.texel >= 0) {
                        double adj_pl = -rec.cos_n * kl * n_l * inv_denom * inv_denom;
                        buf.d_lum[rec.texel] += adj_pl / sampler.total();
                        buf.z_adj -= adj_pl * rec.p_light / sampler.total();
                    }
                    // Geometric factors: light-strategy directions are fixed
                    // in world space, cosine-strategy ones co-rotate with the
                    // frame and cancel.
                    if (rec.from_light) {
                        double adj_cos = kl * n_l * rec.p_light * inv_denom * inv_denom;
                        adj_n += rec.w * adj_cos;
                    }
                }
                Vec3 adj_rho = adj_diffuse * (1.0 / kPi) * sum_s;
                {
                    BilinearFootprint fp = bilinear_footprint(scene.textures.albedo, sp.uv.x, sp.uv.y);
                    for (int q = 0; q < 4; ++q) {
                        size_t base = (static_cast<size_t>(fp.y[q]) * scene.textures.albedo.width + fp.x[q]) * 3;
                        for (int c = 0; c < 3; ++c) buf.d_albedo[base + c] += adj_rho[c] * fp.w[q];
                    }
                    adj_uv.x += dot(adj_rho, mat.dalbedo_du);
                    adj_uv.y += dot(adj_rho, mat.dalbedo_dv);
                }

                // ---- Roughness texture scatter ----
                {
                    BilinearFootprint fp = bilinear_footprint(scene.textures.roughness, sp.uv.x, sp.uv.y);
                    for (int q = 0; q < 4; ++q)
                        buf.d_roughness[static_cast<size_t>(fp.y[q]) * scene.textures.roughness.width + fp.x[q]] +=
                            adj_roughness * fp.w[q];
                    adj_uv.x += adj_roughness * mat.droughness_du;
                    adj_uv.y += adj_roughness * mat.droughness_dv;
                }

                // ---- Geometry backward: wo, shading normal, uv, barycentrics ----
                Vec3 adj_x_w(0, 0, 0);
                {
                    Vec3 y = cam.camera_to_world.t - sp.x_w;
                    double ylen = length(y);
                    Vec3 adj_y = (adj_wo - point.wo * dot(point.wo, adj_wo)) / ylen;
                    adj_x_w -= adj_y;
                }
                Vec3 adj_n_m = world_rot.apply_vector_transposed(adj_n);
                double blen = length(sp.n_bary_m);
                Vec3 n_m = sp.n_bary_m / blen;
                Vec3 adj_n_bary = (adj_n_m - n_m * dot(n_m, adj_n_m)) / blen;

                const auto& fidx = scene.mesh.faces[sp.face];
                const auto& vn = scene.mesh.vertex_normals;
                double adj_b[3] = {dot(vn[fidx[0]], adj_n_bary), dot(vn[fidx[1]], adj_n_bary),
                                   dot(vn[fidx[2]], adj_n_bary)};
                buf.d_vertex_normals[fidx[0]] += adj_n_bary * sp.b0;
                buf.d_vertex_normals[fidx[1]] += adj_n_bary * sp.b1;
                buf.d_vertex_normals[fidx[2]] += adj_n_bary * sp.b2;

                const auto& cuv = scene.mesh.corner_uvs[sp.face];
                for (int i = 0; i < 3; ++i) adj_b[i] += cuv[i].x * adj_uv.x + cuv[i].y * adj_uv.y;

                Vec3 adj_x_m = world_rot.apply_vector_transposed(adj_x_w);
                double adj_t = dot(sp.d_m, adj_x_m);

                // b0 = 1 - u - v, b1 = u, b2 = v.
                double adj_u = adj_b[1] - adj_b[0];
                double adj_v = adj_b[2] - adj_b[0];

                // Reverse of the intersection expression.
                const Vec3& A = scene.mesh.vertices[fidx[0]];
                const Vec3& B = scene.mesh.vertices[fidx[1]];
                const Vec3& C = scene.mesh.vertices[fidx[2]];
                Vec3 e1 = B - A, e2 = C - A;
                Vec3 pv = cross(sp.d_m, e2);
                double det = dot(e1, pv);
                double inv = 1.0 / det;
                Vec3 tv = sp.o_m - A;
                Vec3 q = cross(tv, e1);

                Vec3 adj_e1(0, 0, 0), adj_e2(0, 0, 0), adj_tv(0, 0, 0), adj_pv(0, 0, 0), adj_q(0, 0, 0);
                double adj_inv = 0.0;
                adj_e2 += q * (adj_t * inv);
                adj_q += e2 * (adj_t * inv);
                adj_inv += dot(e2, q) * adj_t;
                adj_q += sp.d_m * (adj_v * inv);
                adj_inv += dot(sp.d_m, q) * adj_v;
                adj_tv += pv * (adj_u * inv);
                adj_pv += tv * (adj_u * inv);
                adj_inv += dot(tv, pv) * adj_u;
                adj_tv += cross(e1, adj_q);
                adj_e1 += cross(adj_q, tv);
                double adj_det = -inv * inv * adj_inv;
                adj_e1 += pv * adj_det;
                adj_pv += e1 * adj_det;
                adj_e2 += cross(adj_pv, sp.d_m);

                buf.d_vertices[fidx[0]] += -(adj_tv + adj_e1 + adj_e2);
                buf.d_vertices[fidx[1]] += adj_e1;
                buf.d_vertices[fidx[2]] += adj_e2;
            }
        });
    }

    // ---- Loss assembly (worker partials merged in fixed order) ----
    double image_abs = 0.0, diffuse_sq = 0.0;
    for (const WorkerBuf& b : bufs) {
        image_abs += b.image_abs;
        diffuse_sq += b.diffuse_sq;
    }
    double image_loss = image_weight_total > 0.0 ? image_abs / image_weight_total : 0.0;
    double diffuse_loss = covered_total > 0 ? diffuse_sq / (covered_total * 3.0) : 0.0;
    double lap_loss = loss_laplacian(scene.mesh.vertices, ctx.v_init, ctx.laplacian);
    double light_loss = loss_light_white(scene.env);
    double rough_loss = loss_rough_tv(scene.textures.roughness);
    out.loss = total_loss(image_loss, mask_loss, lap_loss, light_loss, rough_loss, diffuse_loss, ctx.weights);

    if (!with_grads) return out;

    // ---- Merge worker buffers ----
    GradientSet& g = *grads_out;
    g.init_like(params);
    std::vector<Vec3> d_vertex_normals(scene.mesh.vertex_count(), Vec3(0, 0, 0));
    std::vector<double> d_albedo(scene.textures.albedo.data.size(), 0.0);
    std::vector<double> d_intensity(scene.textures.intensity.data.size(), 0.0);
    std::vector<double> d_roughness(scene.textures.roughness.data.size(), 0.0);
    std::vector<double> d_env0(scene.env.texel_count(0) * 3, 0.0);
    std::vector<std::vector<double>> d_pyramid(scene.env.levels());
    for (int kk = 0; kk < scene.env.levels(); ++kk) d_pyramid[kk].assign(scene.env.texel_count(kk) * 3, 0.0);
    std::vector<double> d_lum(scene.env.texel_count(0), 0.0);
    double z_adj = 0.0;
    for (const WorkerBuf& b : bufs) {
        if (b.d_vertices.empty()) continue;
        for (size_t i = 0; i < d_vertex_normals.size(); ++i) {
            g.vertices[i] += b.d_vertices[i];
            d_vertex_normals[i] += b.d_vertex_normals[i];
        }
        for (size_t i = 0; i < d_albedo.size(); ++i) d_albedo[i] += b.d_albedo[i];
        for (size_t i = 0; i < d_intensity.size(); ++i) d_intensity[i] += b.d_intensity[i];
        for (size_t i = 0; i < d_roughness.size(); ++i) d_roughness[i] += b.d_roughness[i];
        for (size_t i = 0; i < d_env0.size(); ++i) d_env0[i] += b.d_env0[i];
        for (int kk = 0; kk < scene.env.levels(); ++kk)
            for (size_t i = 0; i < d_pyramid[kk].size(); ++i) d_pyramid[kk][i] += b.d_pyramid[kk][i];
        for (size_t i = 0; i < d_lum.size(); ++i) d_lum[i] += b.d_lum[i];
        z_adj += b.z_adj;
    }

    // ---- Pyramid adjoints back to mip-0 radiance ----
    {
        // Level 0 is the identity copy.
        for (size_t i = 0; i < d_pyramid[0].size(); ++i) d_env0[i] += d_pyramid[0][i];
        std::vector<PrefilterTap> taps;
        for (int kk = 1; kk < scene.env.levels(); ++kk) {
            int res_k = scene.env.resolution_at(kk);
            for (int64_t ti = 0; ti < scene.env.texel_count(kk); ++ti) {
                double a0 = d_pyramid[kk][ti * 3 + 0], a1 = d_pyramid[kk][ti * 3 + 1], a2 = d_pyramid[kk][ti * 3 + 2];
                if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0) continue;
                int face = static_cast<int>(ti / (static_cast<int64_t>(res_k) * res_k));
                int rem = static_cast<int>(ti % (static_cast<int64_t>(res_k) * res_k));
                prefilter_taps(scene.env, kk, face, rem % res_k, rem / res_k, taps);
                for (const PrefilterTap& tap : taps) {
                    d_env0[tap.texel * 3 + 0] += a0 * tap.weight;
                    d_env0[tap.texel * 3 + 1] += a1 * tap.weight;
                    d_env0[tap.texel * 3 + 2] += a2 * tap.weight;
                }
            }
        }
    }

    // ---- Sampler luminance chain ----
    if (!sampler.uniform_fallback()) {
        int res0 = scene.env.base_resolution();
        for (int64_t t = 0; t < scene.env.texel_count(0); ++t) {
            int rem = static_cast<int>(t % (static_cast<int64_t>(res0) * res0));
            double dl = d_lum[t] + z_adj * texel_solid_angle(res0, rem % res0, rem / res0);
            if (dl == 0.0) continue;
            d_env0[t * 3 + 0] += dl * 0.2126;
            d_env0[t * 3 + 1] += dl * 0.7152;
            d_env0[t * 3 + 2] += dl * 0.0722;
        }
    }

    // ---- White-light regularizer (on radiance) ----
    {
        double scale_w = ctx.weights.light / scene.env.texel_count(0);
        for (int f = 0; f < 6; ++f) {
            const Image& face = scene.env.face(0, f);
            for (size_t p = 0; p < face.pixel_count(); ++p) {
                double c[3] = {face.data[3 * p], face.data[3 * p + 1], face.data[3 * p + 2]};
                double mean = (c[0] + c[1] + c[2]) / 3.0;
                double s[3];
                for (int i = 0; i < 3; ++i) s[i] = c[i] > mean ? 1.0 : (c[i] < mean ? -1.0 : 0.0);
                double ssum = s[0] + s[1] + s[2];
                int64_t base = (scene.env.texel_index(0, f, 0, 0) + static_cast<int64_t>(p)) * 3;
                for (int i = 0; i < 3; ++i) d_env0[base + i] += scale_w * (s[i] - ssum / 3.0);
            }
        }
    }

    // ---- Roughness TV regularizer (on values) ----
    {
        const Image& rt = scene.textures.roughness;
        double scale_w = ctx.weights.rough / rt.pixel_count();
        auto sgn = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
        for (int y = 0; y < rt.height; ++y)
            for (int x = 0; x < rt.width; ++x) {
                int x1 = std::min(x + 1, rt.width - 1);
                int y1 = std::min(y + 1, rt.height - 1);
                double sx = sgn(rt.at(x1, y, 0) - rt.at(x, y, 0));
                double sy = sgn(rt.at(x, y1, 0) - rt.at(x, y, 0));
                d_roughness[static_cast<size_t>(y) * rt.width + x1] += scale_w * sx;
                d_roughness[static_cast<size_t>(y) * rt.width + x] -= scale_w * sx;
                d_roughness[static_cast<size_t>(y1) * rt.width + x] += scale_w * sy;
                d_roughness[static_cast<size_t>(y) * rt.width + x] -= scale_w * sy;
            }
    }

    // ---- Vertex-normal adjoints back to positions ----
    {
        const TriangleMesh& mesh = scene.mesh;
        std::vector<Vec3> area_normal(mesh.vertex_count(), Vec3(0, 0, 0));
        for (size_t f = 0; f < mesh.face_count(); ++f) {
            Vec3 fn = mesh.face_normal_unnormalized(static_cast<int>(f));
            for (int kq = 0; kq < 3; ++kq) area_normal[mesh.faces[f][kq]] += fn;
        }
        std::vector<Vec3> adj_area(mesh.vertex_count(), Vec3(0, 0, 0));
        for (size_t i = 0; i < mesh.vertex_count(); ++i) {
            double len = length(area_normal[i]);
            if (len <= 0.0) continue;
            const Vec3& n = mesh.vertex_normals[i];
            adj_area[i] = (d_vertex_normals[i] - n * dot(n, d_vertex_normals[i])) / len;
        }
        for (size_t f = 0; f < mesh.face_count(); ++f) {
            const auto& t = mesh.faces[f];
            Vec3 adj_cr = adj_area[t[0]] + adj_area[t[1]] + adj_area[t[2]];
            Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
            Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
            Vec3 adj_e1 = cross(e2, adj_cr);
            Vec3 adj_e2 = cross(adj_cr, e1);
            g.vertices[t[1]] += adj_e1;
            g.vertices[t[2]] += adj_e2;
            g.vertices[t[0]] -= adj_e1 + adj_e2;
        }
    }

    // ---- Laplacian regularizer ----
    {
        std::vector<Vec3> delta(scene.mesh.vertex_count());
        for (size_t i = 0; i < delta.size(); ++i) delta[i] = scene.mesh.vertices[i] - ctx.v_init[i];
        std::vector<Vec3> ld, lld;
        ctx.laplacian.apply(delta, ld);
        ctx.laplacian.apply(ld, lld);
        for (size_t i = 0; i < delta.size(); ++i) g.vertices[i] += lld[i] * (2.0 * ctx.weights.laplacian);
    }

    // ---- Chain value-space gradients into latents ----
    for (size_t i = 0; i < d_albedo.size(); ++i)
        g.albedo_latent.data[i] = d_albedo[i] * decode_albedo_grad(scene.textures.albedo.data[i]);
    for (size_t i = 0; i < d_intensity.size(); ++i)
        g.intensity_latent.data[i] = d_intensity[i] * decode_intensity_grad(scene.textures.intensity.data[i]);
    for (size_t i = 0; i < d_roughness.size(); ++i)
        g.roughness_latent.data[i] = d_roughness[i] * decode_roughness_grad(scene.textures.roughness.data[i]);
    for (int f = 0; f < 6; ++f) {
        int res0 = scene.env.base_resolution();
        for (int64_t p = 0; p < static_cast<int64_t>(res0) * res0; ++p) {
            int64_t t = scene.env.texel_index(0, f, static_cast<int>(p % res0), static_cast<int>(p / res0));
            for (int c = 0; c < 3; ++c)
                g.env_latent[f].data[p * 3 + c] = d_env0[t * 3 + c] * decode_env_grad(params.env_latent[f].data[p * 3 + c]);
        }
    }
    return out;
}

}  // namespace

ForwardResult evaluate_loss(OptimContext& ctx, const OptimParameters& params, const std::vector<int>& frame_indices,
                            uint64_t iteration) {
    sync_state(ctx, params);
    PassResult pass = run_pass(ctx, params, frame_indices, iteration, false, nullptr);
    return {pass.loss, std::move(pass.renders)};
}

GradientResult compute_gradients(OptimContext& ctx, const OptimParameters& params, const std::vector<int>& frame_indices,
                                 uint64_t iteration, const FreezeFlags& freeze) {
    sync_state(ctx, params);
    GradientResult out;
    PassResult pass = run_pass(ctx, params, frame_indices, iteration, true, &out.grads);
    out.loss = pass.loss;
    if (freeze.vertices) std::fill(out.grads.vertices.begin(), out.grads.vertices.end(), Vec3(0, 0, 0));
    if (freeze.albedo) std::fill(out.grads.albedo_latent.data.begin(), out.grads.albedo_latent.data.end(), 0.0);
    if (freeze.intensity) std::fill(out.grads.intensity_latent.data.begin(), out.grads.intensity_latent.data.end(), 0.0);
    if (freeze.roughness) std::fill(out.grads.roughness_latent.data.begin(), out.grads.roughness_latent.data.end(), 0.0);
    if (freeze.env)
        for (int f = 0; f < 6; ++f) std::fill(out.grads.env_latent[f].data.begin(), out.grads.env_latent[f].data.end(), 0.0);
    out.grads.check_finite();
    return out;
}

}  // namespace occlurend
