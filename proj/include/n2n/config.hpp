#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "n2n/controller.hpp"
#include "n2n/models/teacher.hpp"
#include "n2n/sim/scenario.hpp"

namespace n2n {

// Whole-pipeline configuration. Section and field names mirror the JSON
// config files; unknown keys are rejected, missing keys take defaults.
struct Config {
    uint64_t seed = 42;

    struct Sim {
        double dt = 0.5;
        int steps = 40;
        int image_h = 64;
        int image_w = 64;
        double fov_deg = 90.0;
        double view_range = 8.0;
        double robot_radius = 0.3;
        int horizon = 5;
        double train_frac = 0.7;
        double val_frac = 0.15;
    } sim;

    struct Teacher {
        int embed_dim = 256;
        int layers = 6;
        int heads = 8;
        int mlp_hidden = 1024;
        int conv_base = 16;
        int dec_hidden = 512;
        double learning_rate = 2e-4;
        double weight_decay = 0.01;
        int epochs = 20;
        int batch_size = 32;
    } teacher;

    struct Pretrain {
        double lambda = 5e-3;
        double mask_prob = 0.5;
        int batch_size = 32;
        int epochs = 20;
        double learning_rate = 2e-4;
        double weight_decay = 0.01;
        int proj_hidden = 512;
        int proj_dim = 128;
    } pretrain;

    struct Finetune {
        double learning_rate = 2e-4;
        double weight_decay = 0.01;
        int epochs = 20;
        int batch_size = 32;
        double mask_prob = 0.5;
    } finetune;

    struct Controller {
        double min_lookahead = 0.2;
        double lookahead_gain = 0.6;
        double cruise_speed = 0.8;
        double goal_tolerance = 0.5;
        double time_budget = 30.0;
    } controller;

    struct Eval {
        std::string split = "test";
        int trials = 10;
    } eval;
};

Config config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const Config& c);

// Reads a JSON config file; an empty path returns the defaults.
Config load_config(const std::string& path);

// Canonical hash over the serialized config, seed excluded, so reruns of the
// same pipeline at different seeds still share artifact lineage.
std::string compute_config_hash(const Config& c);

void validate_config(const Config& c);

sim::SimConfig sim_config(const Config& c);
models::ModelDims model_dims(const Config& c);
control::ControllerConfig controller_config(const Config& c);

}  // namespace n2n
