#include "occlurend/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "occlurend/render.hpp"
#include "occlurend/rng.hpp"

namespace occlurend {

namespace {

// Icosahedron with unit-sphere vertices.
void icosahedron(std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& faces) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    const double raw[12][3] = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                               {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    verts.clear();
    for (auto& p : raw) verts.push_back(normalize(Vec3(p[0], p[1], p[2])));
    faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
             {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
}

void subdivide(std::vector<Vec3>& verts, std::vector<std::array<int, 3>>& faces) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Vec3 m = normalize(verts[a] + verts[b]);
        verts.push_back(m);
        int idx = static_cast<int>(verts.size()) - 1;
        midpoint[key] = idx;
        return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
        int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
        next.push_back({f[0], ab, ca});
        next.push_back({f[1], bc, ab});
        next.push_back({f[2], ca, bc});
        next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
}

// Spherical UVs per corner; the azimuth wrap is repaired within each face
// and pole corners take the mean azimuth of their partners.
void assign_sphere_uvs(TriangleMesh& mesh) {
    mesh.corner_uvs.resize(mesh.face_count());
    for (size_t f = 0; f < mesh.face_count(); ++f) {
        double us[3], vs[3];
        bool pole[3];
        for (int k = 0; k < 3; ++k) {
            Vec3 d = normalize(mesh.vertices[mesh.faces[f][k]]);
            us[k] = std::atan2(d.y, d.x) / (2.0 * kPi) + 0.5;
            vs[k] = std::acos(std::clamp(d.z, -1.0, 1.0)) / kPi;
            pole[k] = std::fabs(d.z) > 1.0 - 1e-9;
        }
        // Unwrap: pull any corner more than half a turn from corner 0.
        for (int k = 1; k < 3; ++k) {
            if (us[k] - us[0] > 0.5) us[k] -= 1.0;
            if (us[k] - us[0] < -0.5) us[k] += 1.0;
        }
        for (int k = 0; k < 3; ++k)
            if (pole[k]) us[k] = (us[(k + 1) % 3] + us[(k + 2) % 3]) / 2.0;
        // Shift the whole face into [0,1] where possible.
        double lo = std::min({us[0], us[1], us[2]});
        if (lo < 0.0)
            for (double& u : us) u += 1.0;
        for (int k = 0; k < 3; ++k) mesh.corner_uvs[f][k] = Vec2(us[k], vs[k]);
    }
}

const Vec3 kDentCenterDir(0.0, 0.0, -1.0);  // faces the default camera

}  // namespace

TriangleMesh make_icosphere(int subdivisions, double radius) {
    TriangleMesh mesh;
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> faces;
    icosahedron(verts, faces);
    for (int s = 0; s < subdivisions; ++s) subdivide(verts, faces);
    mesh.vertices.reserve(verts.size());
    for (const Vec3& v : verts) mesh.vertices.push_back(v * radius);
    mesh.faces = std::move(faces);
    assign_sphere_uvs(mesh);
    compute_vertex_normals(mesh);
    return mesh;
}

TriangleMesh make_dented_blob(int subdivisions, double radius, double dent_depth, double dent_width) {
    TriangleMesh mesh = make_icosphere(subdivisions, radius);
    Vec3 center = kDentCenterDir * radius;
    for (Vec3& v : mesh.vertices) {
        double d2 = length_squared(v - center);
        double dent = dent_depth * std::exp(-d2 / (dent_width * dent_width));
        v *= 1.0 - dent;
    }
    compute_vertex_normals(mesh);
    return mesh;
}

Image dent_region_mask(int width, int height, double dent_width) {
    Image mask(width, height, 1);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double u = (x + 0.5) / width, v = (y + 0.5) / height;
            double theta = v * kPi, phi = (u - 0.5) * 2.0 * kPi;
            Vec3 d(std::cos(phi) * std::sin(theta), std::sin(phi) * std::sin(theta), std::cos(theta));
            if (length_squared(d - kDentCenterDir) < dent_width * dent_width) mask.at(x, y, 0) = 1.0;
        }
    return mask;
}

EnvironmentMap make_blob_environment(int resolution, uint64_t seed) {
    EnvironmentMap env(resolution);
    Pcg32 rng(seed, 0xb10b5);
    struct Lobe {
        Vec3 dir;
        Vec3 color;
        double sharpness;
    };
    std::vector<Lobe> lobes;
    const Vec3 palette[3] = {{1.0, 0.92, 0.78}, {0.78, 0.88, 1.0}, {0.95, 1.0, 0.9}};
    for (int i = 0; i < 3; ++i) {
        double z = 0.2 + 0.75 * rng.next_double();
        double phi = 2.0 * kPi * rng.next_double();
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        Lobe lobe;
        lobe.dir = normalize(Vec3(s * std::cos(phi), s * std::sin(phi), (i == 0 ? -z : z)));
        lobe.color = palette[i] * (2.0 + 2.0 * rng.next_double());
        lobe.sharpness = 5.0 + 6.0 * rng.next_double();
        lobes.push_back(lobe);
    }
    for (int f = 0; f < 6; ++f) {
        Image& img = env.face(0, f);
        for (int y = 0; y < resolution; ++y)
            for (int x = 0; x < resolution; ++x) {
                Vec3 w = texel_center_dir(f, resolution, x, y);
                Vec3 c(0.15, 0.15, 0.15);
                for (const Lobe& lobe : lobes) c += lobe.color * std::exp(lobe.sharpness * (dot(w, lobe.dir) - 1.0));
                img.at(x, y, 0) = c.x;
                img.at(x, y, 1) = c.y;
                img.at(x, y, 2) = c.z;
            }
    }
    return env;
}

namespace {

Image make_albedo_texture(const SyntheticSpec& spec) {
    Image img(spec.texture_size, spec.texture_size, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            Vec3 c;
            if (spec.albedo_pattern == "constant") {
                c = spec.albedo_a;
            } else if (spec.albedo_pattern == "smooth") {
                double u = (x + 0.5) / img.width, v = (y + 0.5) / img.height;
                double t = 0.5 + 0.5 * std::sin(2.0 * kPi * u) * std::cos(kPi * v);
                c = spec.albedo_a * t + spec.albedo_b * (1.0 - t);
            } else {  // two_tone checker
                int tile = ((x * 8 / img.width) + (y * 8 / img.height)) % 2;
                c = tile == 0 ? spec.albedo_a : spec.albedo_b;
            }
            img.at(x, y, 0) = c.x;
            img.at(x, y, 1) = c.y;
            img.at(x, y, 2) = c.z;
        }
    return img;
}

std::vector<RigidTransform> make_pose_sweep(int poses, double range_deg) {
    std::vector<RigidTransform> out;
    out.push_back(RigidTransform::identity());
    double range = range_deg * kPi / 180.0;
    int n_y = (poses - 1) * 2 / 3;
    int n_x = poses - 1 - n_y;
    for (int i = 0; i < n_y; ++i) {
        double a = -range + 2.0 * range * (i + 0.5) / n_y;
        out.push_back(RigidTransform::rotation_axis_angle(Vec3(0, 1, 0), a));
    }
    for (int i = 0; i < n_x; ++i) {
        double a = -range + 2.0 * range * (i + 0.5) / std::max(1, n_x);
        out.push_back(RigidTransform::rotation_axis_angle(Vec3(1, 0, 0), a));
    }
    return out;
}

}  // namespace

Scene build_synthetic_scene(const SyntheticSpec& spec, bool render_targets) {
    if (spec.poses < 1) throw std::runtime_error("synthetic: pose count must be >= 1");
    if (std::fabs(spec.rotation_range_deg) > 90.0) throw std::runtime_error("synthetic: rotation range beyond 90 deg");
    Scene scene;
    if (spec.base == "sphere")
        scene.mesh = make_icosphere(spec.subdivisions);
    else if (spec.base == "dented_blob")
        scene.mesh = make_dented_blob(spec.subdivisions);
    else
        throw std::runtime_error("synthetic: unknown base mesh " + spec.base);

    scene.textures.albedo = make_albedo_texture(spec);
    scene.textures.intensity = Image(spec.texture_size, spec.texture_size, 1, spec.intensity_value);
    scene.textures.roughness = Image(spec.texture_size, spec.texture_size, 1, spec.roughness_value);

    if (spec.env_kind == "uniform") {
        scene.env = EnvironmentMap(spec.env_resolution);
        for (int f = 0; f < 6; ++f)
            for (double& v : scene.env.face(0, f).data) v = spec.env_uniform_value;
    } else {
        scene.env = make_blob_environment(spec.env_resolution, spec.seed);
    }

    scene.camera.width = spec.image_size;
    scene.camera.height = spec.image_size;
    scene.camera.focal_px = 1.1 * spec.image_size;
    scene.camera.cx = spec.image_size / 2.0;
    scene.camera.cy = spec.image_size / 2.0;
    scene.camera.camera_to_world = RigidTransform::identity();
    scene.camera.camera_to_world.t = Vec3(0, 0, -3);

    std::vector<RigidTransform> poses = make_pose_sweep(spec.poses, spec.rotation_range_deg);
    for (int i = 0; i < spec.poses; ++i) {
        Frame frame;
        frame.id = i;
        frame.model_to_world = poses[i];
        scene.frames.push_back(frame);
    }

    if (render_targets) {
        Pipeline pipeline;
        pipeline.build(scene);
        prefilter_envmap(scene.env);
        for (Frame& frame : scene.frames) {
            RenderOutput render = render_frame(pipeline, frame, spec.target_budget, spec.seed);
            frame.target = std::move(render.color);
            frame.mask = std::move(render.mask);
        }
    }
    return scene;
}

void synthesize_dataset(const SyntheticSpec& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    Scene scene = build_synthetic_scene(spec, true);
    save_scene(out_dir, scene, true);

    // Ground-truth copies for evaluation.
    std::string gt = out_dir + "/ground_truth";
    fs::create_directories(gt);
    write_obj(gt + "/mesh.obj", scene.mesh);
    write_pfm(gt + "/albedo.pfm", scene.textures.albedo);
    write_pfm(gt + "/specular.pfm", scene.textures.intensity);
    write_pfm(gt + "/roughness.pfm", scene.textures.roughness);
    write_environment(gt + "/env", scene.env);
    if (spec.base == "dented_blob")
        write_pfm(gt + "/concavity_mask.pfm", dent_region_mask(spec.texture_size, spec.texture_size));

    // Texture-space visibility of the training views: texels whose bilinear
    // footprint is touched by at least one target pixel.
    Image observed(spec.texture_size, spec.texture_size, 1);
    Pipeline pipeline;
    pipeline.build(scene);
    prefilter_envmap(scene.env);
    for (const Frame& frame : scene.frames) {
        for (int py = 0; py < scene.camera.height; ++py)
            for (int px = 0; px < scene.camera.width; ++px) {
                SurfacePoint sp = trace_surface(scene, pipeline.bvh, frame, px, py);
                if (!sp.hit) continue;
                BilinearFootprint fp = bilinear_footprint(scene.textures.albedo, sp.uv.x, sp.uv.y);
                for (int q = 0; q < 4; ++q)
                    if (fp.w[q] > 1e-6) observed.at(fp.x[q], fp.y[q], 0) = 1.0;
            }
    }
    write_pfm(gt + "/observed_mask.pfm", observed);
}

}  // namespace occlurend
