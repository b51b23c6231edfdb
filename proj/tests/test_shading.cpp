#include <doctest.h>

#include <cmath>
#include <vector>

#include "occlurend/shading.hpp"
#include "occlurend/synthetic.hpp"
#include "oracles.hpp"

using namespace occlurend;
using namespace occlurend::testing;

namespace {

const BrdfLut& shared_lut() {
    static BrdfLut lut = precompute_brdf_lut(1024, 0);
    return lut;
}

struct TestScene {
    TriangleMesh mesh;
    Bvh bvh;
    EnvironmentMap env;
    LightSampler sampler;
    ShadeContext ctx;

    TestScene(TriangleMesh m, EnvironmentMap e) : mesh(std::move(m)), env(std::move(e)) {
        bvh.build(mesh);
        if (!env.pyramid_built()) prefilter_envmap(env);
        sampler = LightSampler(env);
        ctx.mesh = &mesh;
        ctx.bvh = &bvh;
        ctx.env = &env;
        ctx.sampler = &sampler;
        ctx.lut = &shared_lut();
        ctx.occlusion_eps = 1e-4 * mesh.bbox_diagonal();
    }
};

EnvironmentMap uniform_env(int res, double value) {
    EnvironmentMap env(res);
    for (int f = 0; f < 6; ++f)
        for (double& v : env.face(0, f).data) v = value;
    return env;
}

ShadePoint sphere_point(const Vec3& n_dir, const Vec3& wo_dir) {
    ShadePoint p;
    p.normal = normalize(n_dir);
    p.position = p.normal;  // unit sphere
    p.geom_normal = p.normal;
    p.wo = normalize(wo_dir);
    p.albedo = Vec3(1, 1, 1);
    p.spec.intensity = 1.0;
    p.spec.roughness = 0.4;
    p.spec.f0 = kDefaultF0;
    return p;
}

// Tall wall at x = offset blocking the +x half space.
TriangleMesh wall_mesh(double offset, double half_height) {
    TriangleMesh wall;
    double s = 50.0;
    wall.vertices = {{offset, -s, -half_height}, {offset, s, -half_height}, {offset, s, half_height},
                     {offset, -s, half_height}};
    wall.faces = {{0, 1, 2}, {0, 2, 3}};
    return wall;
}

}  // namespace

TEST_CASE("specular visibility: one on a convex sphere for any roughness") {
    TestScene ts(make_icosphere(3), uniform_env(16, 1.0));
    Pcg32 rng(1, 1);
    SampleBudget budget;
    budget.n_vis = 64;
    for (double r : {kRoughnessMin, 0.2, 0.8}) {
        for (int i = 0; i < 32; ++i) {
            double z = 1.0 - 2.0 * rng.next_double();
            double phi = 2.0 * kPi * rng.next_double();
            double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            ShadePoint p = sphere_point(Vec3(s * std::cos(phi), s * std::sin(phi), z),
                                        Vec3(s * std::cos(phi), s * std::sin(phi), z));
            p.spec.roughness = r;
            Pcg32 prng(7, i);
            CHECK(estimate_specular_visibility(ts.ctx, p, budget, prng) == 1.0);
        }
    }
}

TEST_CASE("specular visibility: zero when fully enclosed") {
    TriangleMesh box;
    box.vertices = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1}, {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}};
    box.faces = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                 {2, 3, 7}, {2, 7, 6}, {1, 2, 6}, {1, 6, 5}, {3, 0, 4}, {3, 4, 7}};
    TestScene ts(box, uniform_env(8, 1.0));
    ShadePoint p;
    p.position = Vec3(0, 0, -0.99);
    p.normal = Vec3(0, 0, 1);
    p.geom_normal = p.normal;
    p.wo = normalize(Vec3(0.2, 0.1, 1.0));
    p.spec.roughness = 0.5;
    SampleBudget budget;
    budget.n_vis = 64;
    Pcg32 rng(3, 3);
    CHECK(estimate_specular_visibility(ts.ctx, p, budget, rng) == 0.0);
}

TEST_CASE("specular visibility: half-blocked lobe matches the D-weighted integral") {
    TestScene ts(wall_mesh(1.0, 50.0), uniform_env(8, 1.0));
    ts.ctx.occlusion_eps = 1e-4;
    ShadePoint p;
    p.position = Vec3(0, 0, 0);
    p.normal = Vec3(0, 0, 1);
    p.geom_normal = p.normal;
    p.wo = Vec3(0, 0, 1);
    p.spec.roughness = 0.8;
    SampleBudget budget;
    budget.n_vis = 4096;  // estimator variance below the comparison tolerance
    Pcg32 rng(5, 8);
    double got = estimate_specular_visibility(ts.ctx, p, budget, rng);

    // Brute-force reference: D-weighted average of the analytic visibility
    // of the wall rectangle at x = 1.
    auto wall_blocks = [](const Vec3& w) {
        if (w.x <= 0.0) return false;
        double t = 1.0 / w.x;
        return std::fabs(t * w.y) <= 50.0 && std::fabs(t * w.z) <= 50.0;
    };
    Pcg32 oracle_rng(17, 4);
    double acc = 0.0, wsum = 0.0;
    for (int i = 0; i < 1000000; ++i) {
        NdfSample s = sample_ndf(p.normal, p.wo, p.spec.roughness, oracle_rng.next_double(), oracle_rng.next_double());
        if (!s.valid) continue;
        acc += wall_blocks(s.wi) ? 0.0 : 1.0;
        wsum += 1.0;
    }
    double want = acc / wsum;
    CHECK(std::fabs(got - want) < 0.05);
}

TEST_CASE("specular visibility: monotone as a nested occluder grows") {
    SampleBudget budget;
    budget.n_vis = 256;
    double prev = 1.0;
    for (double height : {0.5, 2.0, 8.0, 50.0}) {
        TestScene ts(wall_mesh(1.0, height), uniform_env(8, 1.0));
        ts.ctx.occlusion_eps = 1e-4;  // pinned: nested occluders, matched rays
        ShadePoint p;
        p.position = Vec3(0, 0, 0);
        p.normal = Vec3(0, 0, 1);
        p.geom_normal = p.normal;
        p.wo = normalize(Vec3(-0.3, 0, 1));
        p.spec.roughness = 0.6;
        Pcg32 rng(9, 9);  // matched samples: exact monotonicity
        double v = estimate_specular_visibility(ts.ctx, p, budget, rng);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    CHECK(prev < 0.9);  // the final wall actually blocks a chunk of the lobe
}

TEST_CASE("shade_specular: visibility gates multiplicatively and exactly") {
    TestScene ts(make_icosphere(2), make_blob_environment(32, 5));
    ShadePoint p = sphere_point(Vec3(0, 0, 1), Vec3(0.3, 0.1, 1));
    Vec3 gated = shade_specular(ts.ctx, p, 0.0);
    CHECK(gated.x == 0.0);
    CHECK(gated.y == 0.0);
    CHECK(gated.z == 0.0);
    Vec3 full = shade_specular(ts.ctx, p, 1.0);
    Vec3 half = shade_specular(ts.ctx, p, 0.5);
    CHECK(half.x == doctest::Approx(0.5 * full.x).epsilon(1e-12));
}

TEST_CASE("shade_specular: constant white environment reduces to the LUT value") {
    TestScene ts(make_icosphere(2), uniform_env(16, 1.0));
    for (double r : {0.05, 0.3, 0.9}) {
        ShadePoint p = sphere_point(Vec3(0, 0, 1), Vec3(0.4, -0.2, 1));
        p.spec.roughness = r;
        p.spec.intensity = 0.7;
        double scale, bias;
        shared_lut().lookup(dot(p.wo, p.normal), r, &scale, &bias);
        Vec3 spec = shade_specular(ts.ctx, p, 1.0);
        CHECK(spec.x == doctest::Approx(0.7 * (scale * p.spec.f0 + bias)).epsilon(1e-9));
    }
}

TEST_CASE("shade_specular: split sum tracks a ray-traced reference on a convex sphere") {
    TestScene ts(make_icosphere(3), make_blob_environment(64, 7));
    SampleBudget budget;
    Pcg32 rng(11, 2);
    std::vector<double> rel_errors;
    for (int i = 0; i < 60; ++i) {
        double z = 0.2 + 0.79 * rng.next_double();
        double phi = 2.0 * kPi * rng.next_double();
        double s = std::sqrt(1.0 - z * z);
        Vec3 n(s * std::cos(phi), s * std::sin(phi), z);
        ShadePoint p = sphere_point(n, normalize(n + Vec3(0.2 * rng.next_double(), 0.2 * rng.next_double(), 0)));
        p.spec.roughness = 0.1;
        Vec3 split = shade_specular(ts.ctx, p, 1.0);

        // Ray-traced specular reference: NDF importance sampling of the
        // full lobe against the raw environment.
        Pcg32 ref_rng(100 + i, 3);
        Vec3 ref(0, 0, 0);
        const int n_ref = 4096;
        for (int k = 0; k < n_ref; ++k) {
            NdfSample smp = sample_ndf(p.normal, p.wo, p.spec.roughness, ref_rng.next_double(), ref_rng.next_double());
            if (!smp.valid || smp.pdf <= 0.0) continue;
            double fs = kelemen_specular_eval(smp.wi, p.wo, p.normal, p.spec);
            ref += ts.env.radiance(smp.wi) * (fs * dot(smp.wi, p.normal) / smp.pdf);
        }
        ref = ref / n_ref;
        double ref_lum = rgb_luminance(ref);
        if (ref_lum < 1e-4) continue;
        rel_errors.push_back(std::fabs(rgb_luminance(split) - ref_lum) / ref_lum);
    }
    REQUIRE(rel_errors.size() > 30);
    std::sort(rel_errors.begin(), rel_errors.end());
    CHECK(rel_errors[rel_errors.size() / 2] <= 0.10);
}

TEST_CASE("shade_diffuse: furnace identity") {
    TestScene ts(make_icosphere(3), uniform_env(16, 1.0));
    SampleBudget budget;  // defaults 256 / 256
    Pcg32 rng(21, 5);
    ShadePoint p = sphere_point(Vec3(0.3, -0.5, 0.8), Vec3(0.3, -0.5, 0.8));
    Vec3 d = shade_diffuse(ts.ctx, p, budget, rng);
    for (int c = 0; c < 3; ++c) CHECK(d[c] == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("shade_diffuse: black albedo kills everything") {
    TestScene ts(make_icosphere(2), make_blob_environment(32, 9));
    SampleBudget budget;
    Pcg32 rng(23, 6);
    ShadePoint p = sphere_point(Vec3(0, 0, 1), Vec3(0, 0, 1));
    p.albedo = Vec3(0, 0, 0);
    Vec3 d = shade_diffuse(ts.ctx, p, budget, rng);
    CHECK(d.x == 0.0);
    CHECK(d.y == 0.0);
    CHECK(d.z == 0.0);
}

TEST_CASE("shade_diffuse: half-space occlusion halves the furnace") {
    TestScene ts(wall_mesh(1.0, 200.0), uniform_env(8, 1.0));
    ts.ctx.occlusion_eps = 1e-4;
    SampleBudget budget{1024, 1024, 16};
    Pcg32 rng(31, 7);
    ShadePoint p;
    p.position = Vec3(0, 0, 0);
    p.normal = Vec3(0, 0, 1);
    p.geom_normal = p.normal;
    p.wo = Vec3(0, 0, 1);
    p.albedo = Vec3(1, 1, 1);
    Vec3 d = shade_diffuse(ts.ctx, p, budget, rng);
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(d[c] - 0.5) < 0.03);
}

TEST_CASE("shade: composition and edge configurations") {
    TestScene ts(make_icosphere(2), make_blob_environment(32, 13));
    SampleBudget budget{64, 64, 16};
    ShadePoint p = sphere_point(Vec3(0.2, 0.4, 0.89), Vec3(0.2, 0.4, 0.89));

    SUBCASE("zero intensity leaves diffuse only") {
        p.spec.intensity = 0.0;
        Pcg32 r1(41, 1), r2(41, 1);
        ShadeResult full = shade(ts.ctx, p, budget, r1);
        Vec3 diffuse = shade_diffuse(ts.ctx, p, budget, r2);
        CHECK(full.color.x == diffuse.x);
        CHECK(full.specular.x == 0.0);
    }
    SUBCASE("zero albedo leaves the pure split-sum specular") {
        p.albedo = Vec3(0, 0, 0);
        Pcg32 r1(42, 2);
        ShadeResult res = shade(ts.ctx, p, budget, r1);
        Vec3 spec = shade_specular(ts.ctx, p, res.vis_tilde);
        CHECK(res.color.x == spec.x);
        CHECK(res.diffuse.x == 0.0);
    }
    SUBCASE("color is exactly diffuse plus specular") {
        Pcg32 r1(43, 3);
        ShadeResult res = shade(ts.ctx, p, budget, r1);
        CHECK(res.color.x == res.diffuse.x + res.specular.x);
        CHECK(res.color.y == res.diffuse.y + res.specular.y);
    }
    SUBCASE("grazing-or-backfacing view returns zero") {
        p.wo = Vec3(0, 0, -1);
        Pcg32 r1(44, 4);
        ShadeResult res = shade(ts.ctx, p, budget, r1);
        CHECK(res.color.x == 0.0);
    }
    SUBCASE("determinism: identical rng state, bit-identical output") {
        Pcg32 r1(45, 5), r2(45, 5);
        ShadeResult a = shade(ts.ctx, p, budget, r1);
        ShadeResult b = shade(ts.ctx, p, budget, r2);
        CHECK(a.color.x == b.color.x);
        CHECK(a.color.y == b.color.y);
        CHECK(a.color.z == b.color.z);
        CHECK(a.vis_tilde == b.vis_tilde);
    }
}

TEST_CASE("shade: furnace composite stays near or below one") {
    TestScene ts(make_icosphere(3), uniform_env(16, 1.0));
    SampleBudget budget;
    Pcg32 rng(51, 9);
    for (int i = 0; i < 16; ++i) {
        double z = 0.1 + 0.89 * rng.next_double();
        double phi = 2.0 * kPi * rng.next_double();
        double s = std::sqrt(1.0 - z * z);
        ShadePoint p = sphere_point(Vec3(s * std::cos(phi), s * std::sin(phi), z),
                                    Vec3(s * std::cos(phi), s * std::sin(phi), z));
        p.spec.intensity = 0.05;
        Pcg32 prng(60 + i, 1);
        ShadeResult res = shade(ts.ctx, p, budget, prng);
        for (int c = 0; c < 3; ++c) CHECK(res.color[c] <= 1.05);
    }
}

TEST_CASE("shade: linear in environment radiance with matched samples") {
    EnvironmentMap env = make_blob_environment(32, 17);
    EnvironmentMap scaled = env;
    for (int f = 0; f < 6; ++f)
        for (double& v : scaled.face(0, f).data) v *= 3.0;
    TestScene a(make_icosphere(2), env);
    TestScene b(make_icosphere(2), scaled);
    SampleBudget budget{128, 128, 16};
    ShadePoint p = sphere_point(Vec3(0.1, 0.2, 0.97), Vec3(0.1, 0.2, 0.97));
    Pcg32 r1(71, 1), r2(71, 1);
    ShadeResult ra = shade(a.ctx, p, budget, r1);
    ShadeResult rb = shade(b.ctx, p, budget, r2);
    // The sampler's relative distribution is scale invariant, so the very
    // same texels are drawn and the output scales exactly.
    for (int c = 0; c < 3; ++c) {
        CHECK(rb.diffuse[c] == doctest::Approx(3.0 * ra.diffuse[c]).epsilon(1e-12));
        CHECK(rb.specular[c] == doctest::Approx(3.0 * ra.specular[c]).epsilon(1e-12));
    }
}

TEST_CASE("shade: diffuse linear in albedo with matched samples") {
    TestScene ts(make_icosphere(2), make_blob_environment(32, 19));
    SampleBudget budget{128, 128, 16};
    ShadePoint p = sphere_point(Vec3(0.5, -0.1, 0.86), Vec3(0.5, -0.1, 0.86));
    p.albedo = Vec3(0.8, 0.4, 0.2);
    Pcg32 r1(81, 1), r2(81, 1);
    Vec3 full = shade_diffuse(ts.ctx, p, budget, r1);
    p.albedo = Vec3(0.4, 0.2, 0.1);
    Vec3 half = shade_diffuse(ts.ctx, p, budget, r2);
    for (int c = 0; c < 3; ++c) CHECK(full[c] == doctest::Approx(2.0 * half[c]).epsilon(1e-12));
}

TEST_CASE("shade: mirror limit approaches the single reflected-ray lookup") {
    TestScene ts(make_icosphere(3), make_blob_environment(64, 21));
    Pcg32 rng(91, 3);
    SampleBudget budget;
    int checked = 0;
    for (int i = 0; i < 40; ++i) {
        double z = 0.3 + 0.69 * rng.next_double();
        double phi = 2.0 * kPi * rng.next_double();
        double s = std::sqrt(1.0 - z * z);
        Vec3 n(s * std::cos(phi), s * std::sin(phi), z);
        ShadePoint p = sphere_point(n, normalize(n + Vec3(0.15, -0.1, 0.05)));
        p.spec.roughness = kRoughnessMin;
        double cos_o = dot(p.wo, p.normal);
        if (cos_o <= 0.0) continue;
        Pcg32 prng(101 + i, 2);
        double vis = estimate_specular_visibility(ts.ctx, p, budget, prng);
        CHECK(vis == 1.0);  // convex: the reflected ray escapes
        Vec3 got = shade_specular(ts.ctx, p, vis);

        Vec3 wr = reflect(p.wo, p.normal);
        double fresnel = p.spec.f0 + (1.0 - p.spec.f0) * std::pow(1.0 - cos_o, 5.0);
        // Single reflected-ray lookup: bilinear fetch of the raw radiance.
        double u, v;
        int face = dir_to_face_uv(wr, &u, &v);
        double texel[3];
        sample_bilinear(ts.env.face(0, face), u, v, texel);
        Vec3 want = Vec3(texel[0], texel[1], texel[2]) * fresnel;
        double rel = std::fabs(rgb_luminance(got) - rgb_luminance(want)) / std::max(rgb_luminance(want), 1e-9);
        if (rgb_luminance(want) > 1e-3) {
            CHECK(rel < 0.05);
            ++checked;
        }
    }
    CHECK(checked > 10);
}

TEST_CASE("shade: the ablation switch forces full visibility") {
    TriangleMesh box;
    box.vertices = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1}, {-1, -1, 1}, {1, -1, 1}, {1, 1, 1}, {-1, 1, 1}};
    box.faces = {{0, 2, 1}, {0, 3, 2}, {4, 5, 6}, {4, 6, 7}, {0, 1, 5}, {0, 5, 4},
                 {2, 3, 7}, {2, 7, 6}, {1, 2, 6}, {1, 6, 5}, {3, 0, 4}, {3, 4, 7}};
    TestScene ts(box, uniform_env(8, 1.0));
    ts.ctx.visibility_enabled = false;
    ShadePoint p;
    p.position = Vec3(0, 0, -0.99);
    p.normal = Vec3(0, 0, 1);
    p.geom_normal = p.normal;
    p.wo = normalize(Vec3(0.1, 0, 1));
    p.spec.roughness = 0.4;
    SampleBudget budget;
    Pcg32 rng(111, 4);
    CHECK(estimate_specular_visibility(ts.ctx, p, budget, rng) == 1.0);
}

TEST_CASE("shade: as-printed visibility estimator is exposed and differs") {
    TestScene ts(wall_mesh(1.0, 50.0), uniform_env(8, 1.0));
    ts.ctx.occlusion_eps = 1e-4;
    ShadePoint p;
    p.position = Vec3(0, 0, 0);
    p.normal = Vec3(0, 0, 1);
    p.geom_normal = p.normal;
    p.wo = Vec3(0, 0, 1);
    p.spec.roughness = 0.5;
    SampleBudget budget{64, 64, 256};
    Pcg32 r1(121, 1), r2(121, 1);
    double normalized = estimate_specular_visibility(ts.ctx, p, budget, r1);
    ts.ctx.visibility_as_printed = true;
    double printed = estimate_specular_visibility(ts.ctx, p, budget, r2);
    CHECK(normalized >= 0.0);
    CHECK(normalized <= 1.0);
    // The printed form divides by D and is not a [0,1] fraction.
    CHECK(printed != doctest::Approx(normalized).epsilon(1e-6));
}
