#include "occlurend/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace occlurend {

Ray Camera::primary_ray(int px, int py) const {
    Vec3 dir_cam((px + 0.5 - cx) / focal_px, (py + 0.5 - cy) / focal_px, 1.0);
    Ray ray;
    ray.origin = camera_to_world.t;
    ray.direction = normalize(camera_to_world.apply_vector(dir_cam));
    ray.t_min = 0.0;
    ray.t_max = 1e300;
    return ray;
}

MaterialSample sample_material(const MaterialTextures& tex, const Vec2& uv) {
    MaterialSample out;
    double a[3], da_du[3], da_dv[3];
    sample_bilinear(tex.albedo, uv.x, uv.y, a, da_du, da_dv);
    double s, ds_du, ds_dv;
    sample_bilinear(tex.intensity, uv.x, uv.y, &s, &ds_du, &ds_dv);
    double r, dr_du, dr_dv;
    sample_bilinear(tex.roughness, uv.x, uv.y, &r, &dr_du, &dr_dv);
    for (int c = 0; c < 3; ++c) {
        bool live = a[c] > 0.0 && a[c] < 1.0;
        out.albedo[c] = std::clamp(a[c], 0.0, 1.0);
        out.dalbedo_du[c] = live ? da_du[c] : 0.0;
        out.dalbedo_dv[c] = live ? da_dv[c] : 0.0;
    }
    bool live_s = s > 0.0 && s < 1.0;
    out.intensity = std::clamp(s, 0.0, 1.0);
    out.dintensity_du = live_s ? ds_du : 0.0;
    out.dintensity_dv = live_s ? ds_dv : 0.0;
    bool live_r = r > kRoughnessMin && r < 1.0;
    out.roughness = std::clamp(r, kRoughnessMin, 1.0);
    out.droughness_du = live_r ? dr_du : 0.0;
    out.droughness_dv = live_r ? dr_dv : 0.0;
    return out;
}

namespace {

RigidTransform parse_pose(const nlohmann::json& arr, const std::string& what) {
    if (!arr.is_array() || arr.size() != 16) throw std::runtime_error("scene: " + what + " must be a row-major 4x4 array");
    double m[16];
    for (int i = 0; i < 16; ++i) m[i] = arr[i].get<double>();
    if (std::fabs(m[12]) > 1e-9 || std::fabs(m[13]) > 1e-9 || std::fabs(m[14]) > 1e-9 || std::fabs(m[15] - 1.0) > 1e-9)
        throw std::runtime_error("scene: " + what + " bottom row must be 0 0 0 1");
    RigidTransform t;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) t.r[i][j] = m[4 * i + j];
        t.t[i] = m[4 * i + 3];
    }
    // Rigid check: R R^T == I.
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += t.r[i][k] * t.r[j][k];
            if (std::fabs(acc - (i == j ? 1.0 : 0.0)) > 1e-6)
                throw std::runtime_error("scene: " + what + " rotation is not orthonormal");
        }
    return t;
}

nlohmann::json pose_to_json(const RigidTransform& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) arr.push_back(t.r[i][j]);
        arr.push_back(t.t[i]);
    }
    for (double v : {0.0, 0.0, 0.0, 1.0}) arr.push_back(v);
    return arr;
}

Image load_texture(const std::filesystem::path& base, const std::string& rel, int channels, const char* name) {
    Image img = read_pfm((base / rel).string());
    if (img.channels != channels)
        throw std::runtime_error(std::string("scene: texture ") + name + " must have " + std::to_string(channels) +
                                 " channels");
    return img;
}

}  // namespace

Scene load_scene(const std::string& json_path) {
    namespace fs = std::filesystem;
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("scene: cannot open " + json_path);
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.value("schema_version", 0) != 1) throw std::runtime_error("scene: unsupported schema_version");
    fs::path base = fs::path(json_path).parent_path();

    Scene scene;
    scene.mesh = read_obj((base / doc.at("mesh").get<std::string>()).string());
    const auto& tx = doc.at("textures");
    scene.textures.albedo = load_texture(base, tx.at("albedo").get<std::string>(), 3, "albedo");
    scene.textures.intensity = load_texture(base, tx.at("specular").get<std::string>(), 1, "specular");
    scene.textures.roughness = load_texture(base, tx.at("roughness").get<std::string>(), 1, "roughness");
    scene.env = read_environment((base / doc.at("environment").get<std::string>()).string());
    if (doc.contains("f0")) scene.f0 = doc.at("f0").get<double>();

    const auto& cam = doc.at("camera");
    scene.camera.focal_px = cam.at("focal_px").get<double>();
    scene.camera.cx = cam.at("cx").get<double>();
    scene.camera.cy = cam.at("cy").get<double>();
    scene.camera.width = cam.at("width").get<int>();
    scene.camera.height = cam.at("height").get<int>();
    if (scene.camera.focal_px <= 0.0) throw std::runtime_error("scene: camera focal must be positive");
    if (scene.camera.width < 8 || scene.camera.height < 8) throw std::runtime_error("scene: resolution must be >= 8x8");
    scene.camera.camera_to_world = parse_pose(cam.at("camera_to_world"), "camera_to_world");

    for (const auto& fr : doc.at("frames")) {
        Frame frame;
        frame.id = fr.at("id").get<int>();
        frame.model_to_world = parse_pose(fr.at("model_to_world"), "frame " + std::to_string(frame.id) + " pose");
        if (fr.contains("image")) {
            frame.target = read_pfm((base / fr.at("image").get<std::string>()).string());
            if (frame.target->width != scene.camera.width || frame.target->height != scene.camera.height ||
                frame.target->channels != 3)
                throw std::runtime_error("scene: frame " + std::to_string(frame.id) + " image shape mismatch");
        }
        if (fr.contains("mask")) {
            frame.mask = read_pfm((base / fr.at("mask").get<std::string>()).string());
            if (frame.mask->width != scene.camera.width || frame.mask->height != scene.camera.height ||
                frame.mask->channels != 1)
                throw std::runtime_error("scene: frame " + std::to_string(frame.id) + " mask shape mismatch");
        }
        scene.frames.push_back(std::move(frame));
    }
    return scene;
}

void save_scene(const std::string& dir, const Scene& scene, bool write_targets) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    fs::create_directories(fs::path(dir) / "frames");
    write_obj(dir + "/mesh.obj", scene.mesh);
    write_pfm(dir + "/albedo.pfm", scene.textures.albedo);
    write_pfm(dir + "/specular.pfm", scene.textures.intensity);
    write_pfm(dir + "/roughness.pfm", scene.textures.roughness);
    write_environment(dir + "/env", scene.env);

    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["mesh"] = "mesh.obj";
    doc["textures"] = {{"albedo", "albedo.pfm"}, {"specular", "specular.pfm"}, {"roughness", "roughness.pfm"}};
    doc["environment"] = "env/descriptor.json";
    doc["f0"] = scene.f0;
    doc["camera"] = {{"focal_px", scene.camera.focal_px}, {"cx", scene.camera.cx},     {"cy", scene.camera.cy},
                     {"width", scene.camera.width},       {"height", scene.camera.height},
                     {"camera_to_world", pose_to_json(scene.camera.camera_to_world)}};
    doc["frames"] = nlohmann::json::array();
    char buf[64];
    for (const Frame& fr : scene.frames) {
        nlohmann::json j;
        j["id"] = fr.id;
        j["model_to_world"] = pose_to_json(fr.model_to_world);
        if (write_targets && fr.target) {
            std::snprintf(buf, sizeof(buf), "frames/img_%04d.pfm", fr.id);
            write_pfm(dir + "/" + buf, *fr.target);
            j["image"] = buf;
        }
        if (write_targets && fr.mask) {
            std::snprintf(buf, sizeof(buf), "frames/mask_%04d.pfm", fr.id);
            write_pfm(dir + "/" + buf, *fr.mask);
            j["mask"] = buf;
        }
        doc["frames"].push_back(j);
    }
    std::ofstream out(dir + "/scene.json");
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("scene: cannot write scene.json in " + dir);
}

void Pipeline::build(const Scene& s, int lut_samples) {
    scene = &s;
    bvh.build(s.mesh);
    if (lut.empty()) lut = precompute_brdf_lut(lut_samples);
    built = true;
}

}  // namespace occlurend
