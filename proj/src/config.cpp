#include "n2n/config.hpp"

#include <fstream>
#include <set>

#include "n2n/errors.hpp"
#include "n2n/hash.hpp"

namespace n2n {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError("config section " + where + " must be an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (known.count(it.key()) == 0) {
            throw ConfigError("unknown config key: " + where + "." + it.key());
        }
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

}  // namespace

Config config_from_json(const json& j) {
    Config c;
    reject_unknown(j, {"seed", "sim", "teacher", "pretrain", "finetune", "controller", "eval"},
                   "config");
    get_if(j, "seed", c.seed);

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        reject_unknown(s,
                       {"dt", "steps", "image_h", "image_w", "fov_deg", "view_range",
                        "robot_radius", "horizon", "train_frac", "val_frac"},
                       "sim");
        get_if(s, "dt", c.sim.dt);
        get_if(s, "steps", c.sim.steps);
        get_if(s, "image_h", c.sim.image_h);
        get_if(s, "image_w", c.sim.image_w);
        get_if(s, "fov_deg", c.sim.fov_deg);
        get_if(s, "view_range", c.sim.view_range);
        get_if(s, "robot_radius", c.sim.robot_radius);
        get_if(s, "horizon", c.sim.horizon);
        get_if(s, "train_frac", c.sim.train_frac);
        get_if(s, "val_frac", c.sim.val_frac);
    }
    if (j.contains("teacher")) {
        const json& s = j.at("teacher");
        reject_unknown(s,
                       {"embed_dim", "layers", "heads", "mlp_hidden", "conv_base", "dec_hidden",
                        "learning_rate", "weight_decay", "epochs", "batch_size"},
                       "teacher");
        get_if(s, "embed_dim", c.teacher.embed_dim);
        get_if(s, "layers", c.teacher.layers);
        get_if(s, "heads", c.teacher.heads);
        get_if(s, "mlp_hidden", c.teacher.mlp_hidden);
        get_if(s, "conv_base", c.teacher.conv_base);
        get_if(s, "dec_hidden", c.teacher.dec_hidden);
        get_if(s, "learning_rate", c.teacher.learning_rate);
        get_if(s, "weight_decay", c.teacher.weight_decay);
        get_if(s, "epochs", c.teacher.epochs);
        get_if(s, "batch_size", c.teacher.batch_size);
    }
    if (j.contains("pretrain")) {
        const json& s = j.at("pretrain");
        reject_unknown(s,
                       {"lambda", "mask_prob", "batch_size", "epochs", "learning_rate",
                        "weight_decay", "proj_hidden", "proj_dim"},
                       "pretrain");
        get_if(s, "lambda", c.pretrain.lambda);
        get_if(s, "mask_prob", c.pretrain.mask_prob);
        get_if(s, "batch_size", c.pretrain.batch_size);
        get_if(s, "epochs", c.pretrain.epochs);
        get_if(s, "learning_rate", c.pretrain.learning_rate);
        get_if(s, "weight_decay", c.pretrain.weight_decay);
        get_if(s, "proj_hidden", c.pretrain.proj_hidden);
        get_if(s, "proj_dim", c.pretrain.proj_dim);
    }
    if (j.contains("finetune")) {
        const json& s = j.at("finetune");
        reject_unknown(
            s, {"learning_rate", "weight_decay", "epochs", "batch_size", "mask_prob"},
            "finetune");
        get_if(s, "learning_rate", c.finetune.learning_rate);
        get_if(s, "weight_decay", c.finetune.weight_decay);
        get_if(s, "epochs", c.finetune.epochs);
        get_if(s, "batch_size", c.finetune.batch_size);
        get_if(s, "mask_prob", c.finetune.mask_prob);
    }
    if (j.contains("controller")) {
        const json& s = j.at("controller");
        reject_unknown(s,
                       {"min_lookahead", "lookahead_gain", "cruise_speed", "goal_tolerance",
                        "time_budget"},
                       "controller");
        get_if(s, "min_lookahead", c.controller.min_lookahead);
        get_if(s, "lookahead_gain", c.controller.lookahead_gain);
        get_if(s, "cruise_speed", c.controller.cruise_speed);
        get_if(s, "goal_tolerance", c.controller.goal_tolerance);
        get_if(s, "time_budget", c.controller.time_budget);
    }
    if (j.contains("eval")) {
        const json& s = j.at("eval");
        reject_unknown(s, {"split", "trials"}, "eval");
        get_if(s, "split", c.eval.split);
        get_if(s, "trials", c.eval.trials);
    }
    validate_config(c);
    return c;
}

json config_to_json(const Config& c) {
    return json{
        {"seed", c.seed},
        {"sim",
         {{"dt", c.sim.dt},
          {"steps", c.sim.steps},
          {"image_h", c.sim.image_h},
          {"image_w", c.sim.image_w},
          {"fov_deg", c.sim.fov_deg},
          {"view_range", c.sim.view_range},
          {"robot_radius", c.sim.robot_radius},
          {"horizon", c.sim.horizon},
          {"train_frac", c.sim.train_frac},
          {"val_frac", c.sim.val_frac}}},
        {"teacher",
         {{"embed_dim", c.teacher.embed_dim},
          {"layers", c.teacher.layers},
          {"heads", c.teacher.heads},
          {"mlp_hidden", c.teacher.mlp_hidden},
          {"conv_base", c.teacher.conv_base},
          {"dec_hidden", c.teacher.dec_hidden},
          {"learning_rate", c.teacher.learning_rate},
          {"weight_decay", c.teacher.weight_decay},
          {"epochs", c.teacher.epochs},
          {"batch_size", c.teacher.batch_size}}},
        {"pretrain",
         {{"lambda", c.pretrain.lambda},
          {"mask_prob", c.pretrain.mask_prob},
          {"batch_size", c.pretrain.batch_size},
          {"epochs", c.pretrain.epochs},
          {"learning_rate", c.pretrain.learning_rate},
          {"weight_decay", c.pretrain.weight_decay},
          {"proj_hidden", c.pretrain.proj_hidden},
          {"proj_dim", c.pretrain.proj_dim}}},
        {"finetune",
         {{"learning_rate", c.finetune.learning_rate},
          {"weight_decay", c.finetune.weight_decay},
          {"epochs", c.finetune.epochs},
          {"batch_size", c.finetune.batch_size},
          {"mask_prob", c.finetune.mask_prob}}},
        {"controller",
         {{"min_lookahead", c.controller.min_lookahead},
          {"lookahead_gain", c.controller.lookahead_gain},
          {"cruise_speed", c.controller.cruise_speed},
          {"goal_tolerance", c.controller.goal_tolerance},
          {"time_budget", c.controller.time_budget}}},
        {"eval", {{"split", c.eval.split}, {"trials", c.eval.trials}}}};
}

Config load_config(const std::string& path) {
    if (path.empty()) {
        return Config{};
    }
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw ConfigError("config file is not valid JSON: " + path);
    }
    return config_from_json(j);
}

std::string compute_config_hash(const Config& c) {
    json j = config_to_json(c);
    j.erase("seed");
    return hash_hex(fnv1a64(j.dump()));
}

void validate_config(const Config& c) {
    sim_config(c).validate();
    model_dims(c).validate();
    controller_config(c).validate();
    if (c.teacher.learning_rate <= 0.0 || c.pretrain.learning_rate <= 0.0 ||
        c.finetune.learning_rate <= 0.0) {
        throw ConfigError("learning rates must be positive");
    }
    if (c.teacher.epochs < 1 || c.pretrain.epochs < 1 || c.finetune.epochs < 1) {
        throw ConfigError("epoch counts must be >= 1");
    }
    if (c.pretrain.lambda <= 0.0) {
        throw ConfigError("pretrain.lambda must be positive");
    }
    if (c.pretrain.mask_prob < 0.0 || c.pretrain.mask_prob > 1.0 ||
        c.finetune.mask_prob < 0.0 || c.finetune.mask_prob > 1.0) {
        throw ConfigError("mask_prob must be in [0, 1]");
    }
    if (c.pretrain.batch_size < 4) {
        throw ConfigError("pretrain.batch_size must be >= 4 (batch statistics)");
    }
    if (c.teacher.batch_size < 1 || c.finetune.batch_size < 1) {
        throw ConfigError("batch sizes must be >= 1");
    }
    if (c.eval.trials < 1) {
        throw ConfigError("eval.trials must be >= 1");
    }
    if (c.eval.split != "train" && c.eval.split != "val" && c.eval.split != "test") {
        throw ConfigError("eval.split must be train, val, or test");
    }
}

sim::SimConfig sim_config(const Config& c) {
    sim::SimConfig s;
    s.dt = c.sim.dt;
    s.steps = c.sim.steps;
    s.image_h = c.sim.image_h;
    s.image_w = c.sim.image_w;
    s.fov_deg = c.sim.fov_deg;
    s.view_range = c.sim.view_range;
    s.robot_radius = c.sim.robot_radius;
    s.horizon = c.sim.horizon;
    return s;
}

models::ModelDims model_dims(const Config& c) {
    models::ModelDims d;
    d.embed_dim = c.teacher.embed_dim;
    d.layers = c.teacher.layers;
    d.heads = c.teacher.heads;
    d.mlp_hidden = c.teacher.mlp_hidden;
    d.conv_base = c.teacher.conv_base;
    d.dec_hidden = c.teacher.dec_hidden;
    d.proj_hidden = c.pretrain.proj_hidden;
    d.proj_dim = c.pretrain.proj_dim;
    d.horizon = c.sim.horizon;
    return d;
}

control::ControllerConfig controller_config(const Config& c) {
    control::ControllerConfig k;
    k.min_lookahead = c.controller.min_lookahead;
    k.lookahead_gain = c.controller.lookahead_gain;
    k.cruise_speed = c.controller.cruise_speed;
    k.goal_tolerance = c.controller.goal_tolerance;
    k.time_budget = c.controller.time_budget;
    return k;
}

}  // namespace n2n
