// Run configuration: a versioned JSON document validated strictly at parse
// time (unknown keys rejected, every numeric option range-checked before any
// output is touched).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occlurend/losses.hpp"
#include "occlurend/params.hpp"
#include "occlurend/shading.hpp"
#include "occlurend/synthetic.hpp"

namespace occlurend {

struct RunConfig {
    std::string scene;       // scene.json path
    std::string output_dir;
    std::string checkpoint;  // checkpoint directory for render/relight/metrics
    std::string environment; // replacement environment for relight

    int iterations = 6000;
    int batch_size = 1;
    int checkpoint_every = 500;
    uint64_t seed = 0;
    SampleBudget budget;
    LossWeights weights;
    double lambda_geo = 19.0;
    double lr_vertices = 0.1;
    double lr_env = 0.1;
    double lr_textures = 0.001;
    bool visibility = true;
    bool visibility_as_printed = false;
    bool precondition_before_adam = false;
    bool image_loss_masked = false;
    FreezeFlags freeze;
    int texture_resolution = 256;  // initialization override for optimize
    int lut_samples = 1024;

    // Initial parameter values when no checkpoint seeds the optimization.
    double init_albedo = 0.5;
    double init_intensity = 0.25;
    double init_roughness = 0.4;
    double init_env = 0.5;

    SyntheticSpec synthetic;  // for the synthesize command

    // metrics command inputs
    std::string metrics_a;
    std::string metrics_b;
    std::string metrics_mask;
    std::string metrics_mesh_a;
    std::string metrics_mesh_b;
};

// Parses and validates; throws std::runtime_error naming the offending key.
RunConfig load_run_config(const std::string& path);

// Applies CLI overrides (seed / iterations / out / freeze list / no-visibility).
void apply_freeze_list(FreezeFlags& flags, const std::string& comma_separated);

}  // namespace occlurend
