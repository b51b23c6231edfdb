#include "occlurend/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace occlurend {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw std::runtime_error("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get_checked(const json& obj, const std::string& key, T fallback, T lo, T hi) {
    if (!obj.contains(key)) return fallback;
    T v = obj.at(key).get<T>();
    if (v < lo || v > hi) {
        std::ostringstream oss;
        oss << "config: " << key << " = " << v << " outside [" << lo << ", " << hi << "]";
        throw std::runtime_error(oss.str());
    }
    return v;
}

}  // namespace

void apply_freeze_list(FreezeFlags& flags, const std::string& comma_separated) {
    std::stringstream ss(comma_separated);
    std::string group;
    while (std::getline(ss, group, ',')) {
        if (group.empty()) continue;
        if (group == "vertices") flags.vertices = true;
        else if (group == "albedo") flags.albedo = true;
        else if (group == "intensity") flags.intensity = true;
        else if (group == "roughness") flags.roughness = true;
        else if (group == "env" || group == "environment") flags.env = true;
        else if (group == "textures") flags.albedo = flags.intensity = flags.roughness = true;
        else throw std::runtime_error("config: unknown freeze group '" + group + "'");
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json doc = json::parse(in);

    static const std::set<std::string> top_keys = {
        "schema_version", "scene",        "output_dir",     "checkpoint",     "environment",
        "iterations",     "batch_size",   "checkpoint_every", "seed",         "budget",
        "weights",        "lambda_geo",   "lr_vertices",    "lr_env",         "lr_textures",
        "visibility",     "visibility_as_printed",          "precondition_before_adam",
        "image_loss_masked",              "freeze",         "texture_resolution",
        "lut_samples",    "init",         "synthetic",      "metrics"};
    reject_unknown(doc, top_keys, "top level");
    if (doc.value("schema_version", 0) != 1) throw std::runtime_error("config: schema_version must be 1");

    RunConfig cfg;
    cfg.scene = doc.value("scene", std::string());
    cfg.output_dir = doc.value("output_dir", std::string());
    cfg.checkpoint = doc.value("checkpoint", std::string());
    cfg.environment = doc.value("environment", std::string());
    cfg.iterations = get_checked<int>(doc, "iterations", 6000, 0, 1000000);
    cfg.batch_size = get_checked<int>(doc, "batch_size", 1, 1, 4096);
    cfg.checkpoint_every = get_checked<int>(doc, "checkpoint_every", 500, 0, 1000000);
    cfg.seed = get_checked<uint64_t>(doc, "seed", 0, 0, UINT64_MAX);
    cfg.lambda_geo = get_checked<double>(doc, "lambda_geo", 19.0, 0.0, 1e6);
    cfg.lr_vertices = get_checked<double>(doc, "lr_vertices", 0.1, 0.0, 1e3);
    cfg.lr_env = get_checked<double>(doc, "lr_env", 0.1, 0.0, 1e3);
    cfg.lr_textures = get_checked<double>(doc, "lr_textures", 0.001, 0.0, 1e3);
    cfg.visibility = doc.value("visibility", true);
    cfg.visibility_as_printed = doc.value("visibility_as_printed", false);
    cfg.precondition_before_adam = doc.value("precondition_before_adam", false);
    cfg.image_loss_masked = doc.value("image_loss_masked", false);
    cfg.texture_resolution = get_checked<int>(doc, "texture_resolution", 256, 2, 4096);
    cfg.lut_samples = get_checked<int>(doc, "lut_samples", 1024, 16, 1 << 22);

    if (doc.contains("budget")) {
        const json& b = doc.at("budget");
        reject_unknown(b, {"n_light", "n_brdf", "n_vis"}, "budget");
        cfg.budget.n_light = get_checked<int>(b, "n_light", 256, 1, 1 << 20);
        cfg.budget.n_brdf = get_checked<int>(b, "n_brdf", 256, 1, 1 << 20);
        cfg.budget.n_vis = get_checked<int>(b, "n_vis", 64, 1, 1 << 20);
    }
    if (doc.contains("weights")) {
        const json& w = doc.at("weights");
        reject_unknown(w, {"mask", "laplacian", "light", "rough", "diffuse"}, "weights");
        cfg.weights.mask = get_checked<double>(w, "mask", 0.1, 0.0, 1e6);
        cfg.weights.laplacian = get_checked<double>(w, "laplacian", 10.0, 0.0, 1e6);
        cfg.weights.light = get_checked<double>(w, "light", 0.1, 0.0, 1e6);
        cfg.weights.rough = get_checked<double>(w, "rough", 0.1, 0.0, 1e6);
        cfg.weights.diffuse = get_checked<double>(w, "diffuse", 0.01, 0.0, 1e6);
    }
    if (doc.contains("freeze")) {
        for (const auto& g : doc.at("freeze")) apply_freeze_list(cfg.freeze, g.get<std::string>());
    }
    if (doc.contains("init")) {
        const json& i = doc.at("init");
        reject_unknown(i, {"albedo", "intensity", "roughness", "env"}, "init");
        cfg.init_albedo = get_checked<double>(i, "albedo", 0.5, 0.0, 1.0);
        cfg.init_intensity = get_checked<double>(i, "intensity", 0.25, 0.0, 1.0);
        cfg.init_roughness = get_checked<double>(i, "roughness", 0.4, kRoughnessMin, 1.0);
        cfg.init_env = get_checked<double>(i, "env", 0.5, 0.0, 1e6);
    }
    if (doc.contains("synthetic")) {
        const json& s = doc.at("synthetic");
        reject_unknown(s,
                       {"base", "subdivisions", "poses", "rotation_range_deg", "image_size", "texture_size",
                        "env_resolution", "env_kind", "env_uniform_value", "albedo_pattern", "intensity_value",
                        "roughness_value", "seed", "n_light", "n_brdf", "n_vis"},
                       "synthetic");
        cfg.synthetic.base = s.value("base", std::string("sphere"));
        cfg.synthetic.subdivisions = get_checked<int>(s, "subdivisions", 3, 0, 7);
        cfg.synthetic.poses = get_checked<int>(s, "poses", 20, 1, 10000);
        cfg.synthetic.rotation_range_deg = get_checked<double>(s, "rotation_range_deg", 25.0, 0.0, 90.0);
        cfg.synthetic.image_size = get_checked<int>(s, "image_size", 128, 8, 4096);
        cfg.synthetic.texture_size = get_checked<int>(s, "texture_size", 128, 2, 4096);
        cfg.synthetic.env_resolution = get_checked<int>(s, "env_resolution", 64, 8, 1024);
        cfg.synthetic.env_kind = s.value("env_kind", std::string("blobs"));
        cfg.synthetic.env_uniform_value = get_checked<double>(s, "env_uniform_value", 1.0, 0.0, 1e6);
        cfg.synthetic.albedo_pattern = s.value("albedo_pattern", std::string("two_tone"));
        cfg.synthetic.intensity_value = get_checked<double>(s, "intensity_value", 0.35, 0.0, 1.0);
        cfg.synthetic.roughness_value = get_checked<double>(s, "roughness_value", 0.25, kRoughnessMin, 1.0);
        cfg.synthetic.seed = get_checked<uint64_t>(s, "seed", 7, 0, UINT64_MAX);
        cfg.synthetic.target_budget.n_light = get_checked<int>(s, "n_light", 128, 1, 1 << 20);
        cfg.synthetic.target_budget.n_brdf = get_checked<int>(s, "n_brdf", 128, 1, 1 << 20);
        cfg.synthetic.target_budget.n_vis = get_checked<int>(s, "n_vis", 32, 1, 1 << 20);
    }
    if (doc.contains("metrics")) {
        const json& m = doc.at("metrics");
        reject_unknown(m, {"a", "b", "mask", "mesh_a", "mesh_b"}, "metrics");
        cfg.metrics_a = m.value("a", std::string());
        cfg.metrics_b = m.value("b", std::string());
        cfg.metrics_mask = m.value("mask", std::string());
        cfg.metrics_mesh_a = m.value("mesh_a", std::string());
        cfg.metrics_mesh_b = m.value("mesh_b", std::string());
    }
    return cfg;
}

}  // namespace occlurend
