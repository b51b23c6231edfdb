// occlurend command-line tool.
//
//   occlurend <prefilter|render|relight|optimize|synthesize|metrics>
//             --config <path> [--seed N] [--iterations N] [--no-visibility]
//             [--freeze <groups>] [--out <dir>]
//
// Exit codes: 0 success, 2 configuration/input error, 3 numeric failure.
// OCCLUREND_THREADS caps the worker count.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "occlurend/config.hpp"
#include "occlurend/errors.hpp"
#include "occlurend/gradients.hpp"
#include "occlurend/metrics.hpp"
#include "occlurend/optim.hpp"
#include "occlurend/render.hpp"
#include "occlurend/synthetic.hpp"

namespace occlurend {
namespace {

namespace fs = std::filesystem;

void load_checkpoint_assets(const std::string& dir, Scene& scene) {
    scene.mesh = read_obj(dir + "/mesh.obj");
    scene.textures.albedo = read_pfm(dir + "/albedo.pfm");
    scene.textures.intensity = read_pfm(dir + "/specular.pfm");
    scene.textures.roughness = read_pfm(dir + "/roughness.pfm");
    scene.env = read_environment(dir + "/env");
}

void write_frame_outputs(const std::string& dir, const RenderOutput& render, int frame_id) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d", "color", frame_id);
    write_pfm(dir + "/" + buf + ".pfm", render.color);
    write_ppm(dir + "/" + buf + ".ppm", render.color);
    std::snprintf(buf, sizeof(buf), "%s_%04d.pfm", "diffuse", frame_id);
    write_pfm(dir + "/" + buf, render.diffuse);
    std::snprintf(buf, sizeof(buf), "%s_%04d.pfm", "specular", frame_id);
    write_pfm(dir + "/" + buf, render.specular);
    std::snprintf(buf, sizeof(buf), "%s_%04d.pfm", "mask", frame_id);
    write_pfm(dir + "/" + buf, render.mask);
}

int cmd_prefilter(const RunConfig& cfg) {
    Scene scene = load_scene(cfg.scene);
    fs::create_directories(cfg.output_dir);
    BrdfLut lut = precompute_brdf_lut(cfg.lut_samples, cfg.seed);
    write_brdf_lut(cfg.output_dir + "/brdf_lut.pfm", lut);
    prefilter_envmap(scene.env);
    for (int k = 0; k < scene.env.levels(); ++k) {
        std::string level_dir = cfg.output_dir + "/env_mip_" + std::to_string(k);
        fs::create_directories(level_dir);
        for (int f = 0; f < 6; ++f) write_pfm(level_dir + "/" + kCubeFaceNames[f] + ".pfm", scene.env.face(k, f));
    }
    write_environment(cfg.output_dir + "/env", scene.env);
    std::cout << "prefilter: wrote LUT and " << scene.env.levels() << " mip levels to " << cfg.output_dir << "\n";
    return 0;
}

int cmd_render(const RunConfig& cfg, bool swap_env) {
    Scene scene = load_scene(cfg.scene);
    if (!cfg.checkpoint.empty()) load_checkpoint_assets(cfg.checkpoint, scene);
    fs::create_directories(cfg.output_dir);
    Pipeline pipeline;
    pipeline.build(scene, cfg.lut_samples);
    if (swap_env) {
        if (cfg.environment.empty()) throw std::runtime_error("relight: config key 'environment' is required");
        EnvironmentMap new_env = read_environment(cfg.environment);
        std::vector<RenderOutput> renders = relight(pipeline, new_env, scene.frames, cfg.budget, cfg.seed, cfg.visibility);
        for (size_t i = 0; i < renders.size(); ++i) write_frame_outputs(cfg.output_dir, renders[i], scene.frames[i].id);
    } else {
        prefilter_envmap(scene.env);
        for (const Frame& frame : scene.frames) {
            RenderOutput render = render_frame(pipeline, frame, cfg.budget, cfg.seed, 0, cfg.visibility);
            write_frame_outputs(cfg.output_dir, render, frame.id);
        }
    }
    std::cout << (swap_env ? "relight" : "render") << ": wrote " << scene.frames.size() << " frames to "
              << cfg.output_dir << "\n";
    return 0;
}

int cmd_optimize(const RunConfig& cfg) {
    Scene scene = load_scene(cfg.scene);
    if (!cfg.checkpoint.empty()) {
        load_checkpoint_assets(cfg.checkpoint, scene);
    } else {
        // Free groups start from neutral constants; frozen groups keep the
        // scene's assets (e.g. an environment pinned to ground truth).
        int tr = cfg.texture_resolution;
        if (!cfg.freeze.albedo) scene.textures.albedo = Image(tr, tr, 3, cfg.init_albedo);
        if (!cfg.freeze.intensity) scene.textures.intensity = Image(tr, tr, 1, cfg.init_intensity);
        if (!cfg.freeze.roughness) scene.textures.roughness = Image(tr, tr, 1, cfg.init_roughness);
        if (!cfg.freeze.env) {
            EnvironmentMap env(scene.env.base_resolution());
            for (int f = 0; f < 6; ++f)
                for (double& v : env.face(0, f).data) v = cfg.init_env;
            scene.env = std::move(env);
        }
    }

    OptimContext ctx;
    ctx.init(scene, cfg.weights, cfg.budget, cfg.seed, cfg.visibility);
    ctx.image_loss_masked = cfg.image_loss_masked;
    OptimParameters params = encode_parameters(scene);
    OptimState state;
    state.lr_vertices = cfg.lr_vertices;
    state.lr_env = cfg.lr_env;
    state.lr_textures = cfg.lr_textures;
    state.lambda_geo = cfg.lambda_geo;
    state.precondition_before_adam = cfg.precondition_before_adam;

    OptimizeOptions options;
    options.iterations = cfg.iterations;
    options.batch_size = cfg.batch_size;
    options.checkpoint_every = cfg.checkpoint_every;
    options.seed = cfg.seed;
    options.freeze = cfg.freeze;
    options.output_dir = cfg.output_dir;

    std::vector<IterationLog> logs = optimize(ctx, params, state, options);
    if (!logs.empty())
        std::cout << "optimize: " << logs.size() << " iterations, final total loss " << logs.back().loss.total << "\n";
    else
        std::cout << "optimize: wrote initialization checkpoint\n";
    return 0;
}

int cmd_synthesize(const RunConfig& cfg) {
    synthesize_dataset(cfg.synthetic, cfg.output_dir);
    std::cout << "synthesize: wrote dataset to " << cfg.output_dir << "\n";
    return 0;
}

std::vector<std::string> gather_pfms(const std::string& path) {
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path))
            if (e.path().extension() == ".pfm") files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    return files;
}

int cmd_metrics(const RunConfig& cfg) {
    nlohmann::json report;
    if (!cfg.metrics_a.empty()) {
        std::vector<std::string> as = gather_pfms(cfg.metrics_a);
        std::vector<std::string> bs = gather_pfms(cfg.metrics_b);
        if (as.size() != bs.size()) throw std::runtime_error("metrics: image set sizes differ");
        std::optional<Image> mask;
        if (!cfg.metrics_mask.empty()) mask = read_pfm(cfg.metrics_mask);
        double psnr_acc = 0.0, mae_acc = 0.0;
        report["images"] = nlohmann::json::array();
        for (size_t i = 0; i < as.size(); ++i) {
            Image a = read_pfm(as[i]);
            Image b = read_pfm(bs[i]);
            ImageMetrics m = metrics(a, b, mask ? &*mask : nullptr);
            psnr_acc += m.psnr;
            mae_acc += m.mae;
            report["images"].push_back({{"a", as[i]}, {"b", bs[i]}, {"psnr", m.psnr}, {"mae", m.mae}});
            if (!cfg.output_dir.empty()) {
                fs::create_directories(cfg.output_dir);
                char buf[64];
                std::snprintf(buf, sizeof(buf), "error_%04zu.ppm", i);
                write_ppm(cfg.output_dir + "/" + buf, error_map(a, b, 0.1));
            }
        }
        report["mean_psnr"] = psnr_acc / as.size();
        report["mean_mae"] = mae_acc / as.size();
    }
    if (!cfg.metrics_mesh_a.empty()) {
        TriangleMesh ma = read_obj(cfg.metrics_mesh_a);
        TriangleMesh mb = read_obj(cfg.metrics_mesh_b);
        report["mesh_rms_distance"] = mesh_rms_distance(ma, mb);
    }
    std::cout << report.dump(2) << "\n";
    if (!cfg.output_dir.empty()) {
        fs::create_directories(cfg.output_dir);
        std::ofstream out(cfg.output_dir + "/metrics.json");
        out << report.dump(2) << "\n";
    }
    return 0;
}

}  // namespace
}  // namespace occlurend

int main(int argc, char** argv) {
    using namespace occlurend;
    CLI::App app{"occlurend: occlusion-aware split-sum inverse renderer"};
    app.require_subcommand(1);

    std::string config_path, out_override, freeze_override;
    std::optional<uint64_t> seed_override;
    std::optional<int> iterations_override;
    bool no_visibility = false;

    for (const char* name : {"prefilter", "render", "relight", "optimize", "synthesize", "metrics"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration JSON")->required();
        sub->add_option("--seed", seed_override, "override config seed");
        sub->add_option("--iterations", iterations_override, "override iteration count");
        sub->add_option("--out", out_override, "override output directory");
        sub->add_option("--freeze", freeze_override, "comma-separated parameter groups to freeze");
        sub->add_flag("--no-visibility", no_visibility, "force the specular visibility estimate to 1");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_run_config(config_path);
        if (seed_override) cfg.seed = *seed_override;
        if (iterations_override) cfg.iterations = *iterations_override;
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (!freeze_override.empty()) apply_freeze_list(cfg.freeze, freeze_override);
        if (no_visibility) cfg.visibility = false;

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "prefilter") return cmd_prefilter(cfg);
        if (cmd == "render") return cmd_render(cfg, false);
        if (cmd == "relight") return cmd_render(cfg, true);
        if (cmd == "optimize") return cmd_optimize(cfg);
        if (cmd == "synthesize") return cmd_synthesize(cfg);
        if (cmd == "metrics") return cmd_metrics(cfg);
        std::cerr << "unknown command\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
