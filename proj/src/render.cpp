#include "occlurend/render.hpp"

#include <cmath>
#include <stdexcept>

#include "occlurend/parallel.hpp"

namespace occlurend {

SurfacePoint trace_surface(const Scene& scene, const Bvh& bvh, const Frame& frame, int px, int py) {
    SurfacePoint sp;
    Ray ray_w = scene.camera.primary_ray(px, py);
    RigidTransform model_from_world = frame.model_to_world.inverse();
    sp.o_m = model_from_world.apply_point(ray_w.origin);
    sp.d_m = model_from_world.apply_vector(ray_w.direction);
    Ray ray_m{sp.o_m, sp.d_m, ray_w.t_min, ray_w.t_max};
    auto hit = bvh.intersect(scene.mesh, ray_m);
    if (!hit) return sp;

    // Recompute (t, b1, b2) with the plain intersection expression on the hit
    // face; this is the computation the gradients differentiate.
    const auto& f = scene.mesh.faces[hit->face];
    Ray unbounded = ray_m;
    unbounded.t_min = -1e300;
    unbounded.t_max = 1e300;
    auto exact = intersect_triangle(scene.mesh.vertices[f[0]], scene.mesh.vertices[f[1]], scene.mesh.vertices[f[2]],
                                    unbounded);
    if (!exact) exact = hit;  // numerically razor-thin; keep the BVH values

    sp.hit = true;
    sp.face = hit->face;
    sp.t = exact->t;
    sp.b1 = exact->b1;
    sp.b2 = exact->b2;
    sp.b0 = 1.0 - sp.b1 - sp.b2;
    const auto& cuv = scene.mesh.corner_uvs[sp.face];
    sp.uv = Vec2(sp.b0 * cuv[0].x + sp.b1 * cuv[1].x + sp.b2 * cuv[2].x,
                 sp.b0 * cuv[0].y + sp.b1 * cuv[1].y + sp.b2 * cuv[2].y);
    sp.x_m = sp.o_m + sp.d_m * sp.t;
    sp.x_w = frame.model_to_world.apply_point(sp.x_m);
    const auto& vn = scene.mesh.vertex_normals;
    sp.n_bary_m = vn[f[0]] * sp.b0 + vn[f[1]] * sp.b1 + vn[f[2]] * sp.b2;
    Vec3 n_m = normalize(sp.n_bary_m);
    sp.n_w = frame.model_to_world.apply_vector(n_m);
    Vec3 g_m = normalize(scene.mesh.face_normal_unnormalized(sp.face));
    if (dot(g_m, sp.d_m) > 0.0) g_m = -g_m;  // face the incoming ray
    sp.g_w = frame.model_to_world.apply_vector(g_m);
    sp.wo = normalize(ray_w.origin - sp.x_w);
    return sp;
}

ShadePoint make_shade_point(const Scene& scene, const SurfacePoint& sp, const MaterialSample& mat) {
    ShadePoint p;
    p.position = sp.x_w;
    p.normal = sp.n_w;
    p.geom_normal = sp.g_w;
    p.wo = sp.wo;
    p.albedo = mat.albedo;
    p.spec.intensity = mat.intensity;
    p.spec.roughness = mat.roughness;
    p.spec.f0 = scene.f0;
    return p;
}

namespace {

void check_texture_finite(const Image& img, const char* name) {
    for (double v : img.data)
        if (!std::isfinite(v)) throw std::runtime_error(std::string("render: non-finite value in texture ") + name);
}

ShadeContext make_context(const Pipeline& pipeline, const Frame& frame, const EnvironmentMap& env,
                          const LightSampler& sampler, bool visibility_enabled) {
    ShadeContext ctx;
    ctx.mesh = &pipeline.scene->mesh;
    ctx.bvh = &pipeline.bvh;
    ctx.env = &env;
    ctx.sampler = &sampler;
    ctx.lut = &pipeline.lut;
    ctx.world_from_model = frame.model_to_world;
    ctx.model_from_world = frame.model_to_world.inverse();
    ctx.occlusion_eps = pipeline.scene->occlusion_eps();
    ctx.visibility_enabled = visibility_enabled;
    return ctx;
}

RenderOutput render_with_env(const Pipeline& pipeline, const EnvironmentMap& env, const Frame& frame,
                             const SampleBudget& budget, uint64_t seed, uint64_t iteration, bool visibility_enabled) {
    if (!pipeline.built || pipeline.lut.empty()) throw std::runtime_error("render: pipeline not built");
    if (!env.pyramid_built()) throw std::runtime_error("render: environment pyramid not built");
    const Scene& scene = *pipeline.scene;
    check_texture_finite(scene.textures.albedo, "albedo");
    check_texture_finite(scene.textures.intensity, "specular");
    check_texture_finite(scene.textures.roughness, "roughness");

    int w = scene.camera.width, h = scene.camera.height;
    RenderOutput out;
    out.color = Image(w, h, 3);
    out.diffuse = Image(w, h, 3);
    out.specular = Image(w, h, 3);
    out.mask = Image(w, h, 1);
    out.hits.assign(static_cast<size_t>(w) * h, HitRecord{});

    LightSampler sampler(env);
    ShadeContext ctx = make_context(pipeline, frame, env, sampler, visibility_enabled);

    parallel_ranges(static_cast<int64_t>(w) * h, [&](int, int64_t begin, int64_t end) {
        for (int64_t idx = begin; idx < end; ++idx) {
            int px = static_cast<int>(idx % w);
            int py = static_cast<int>(idx / w);
            SurfacePoint sp = trace_surface(scene, pipeline.bvh, frame, px, py);
            if (!sp.hit) continue;
            out.mask.at(px, py, 0) = 1.0;
            out.hits[idx] = HitRecord{sp.face, sp.b1, sp.b2, sp.uv};
            MaterialSample mat = sample_material(scene.textures, sp.uv);
            ShadePoint point = make_shade_point(scene, sp, mat);
            Pcg32 rng = make_pixel_rng(seed, static_cast<uint64_t>(frame.id), static_cast<uint64_t>(idx), iteration, 0);
            ShadeResult res = shade(ctx, point, budget, rng);
            for (int c = 0; c < 3; ++c) {
                out.color.at(px, py, c) = res.color[c];
                out.diffuse.at(px, py, c) = res.diffuse[c];
                out.specular.at(px, py, c) = res.specular[c];
            }
        }
    });
    return out;
}

}  // namespace

RenderOutput render_frame(const Pipeline& pipeline, const Frame& frame, const SampleBudget& budget, uint64_t seed,
                          uint64_t iteration, bool visibility_enabled) {
    return render_with_env(pipeline, pipeline.scene->env, frame, budget, seed, iteration, visibility_enabled);
}

Image render_mask(const Pipeline& pipeline, const Frame& frame) {
    if (!pipeline.built) throw std::runtime_error("render: pipeline not built");
    const Scene& scene = *pipeline.scene;
    int w = scene.camera.width, h = scene.camera.height;
    Image mask(w, h, 1);
    parallel_ranges(static_cast<int64_t>(w) * h, [&](int, int64_t begin, int64_t end) {
        for (int64_t idx = begin; idx < end; ++idx) {
            int px = static_cast<int>(idx % w);
            int py = static_cast<int>(idx / w);
            SurfacePoint sp = trace_surface(scene, pipeline.bvh, frame, px, py);
            if (sp.hit) mask.at(px, py, 0) = 1.0;
        }
    });
    return mask;
}

std::vector<RenderOutput> relight(const Pipeline& pipeline, EnvironmentMap& new_env, const std::vector<Frame>& frames,
                                  const SampleBudget& budget, uint64_t seed, bool visibility_enabled) {
    if (!new_env.pyramid_built()) prefilter_envmap(new_env);
    std::vector<RenderOutput> out;
    out.reserve(frames.size());
    for (const Frame& frame : frames)
        out.push_back(render_with_env(pipeline, new_env, frame, budget, seed, 0, visibility_enabled));
    return out;
}

}  // namespace occlurend
