#include "n2n/pipeline.hpp"

#include <cmath>

#include "n2n/errors.hpp"

namespace n2n::pipeline {

using models::ModelDims;
using models::StudentModel;
using models::TeacherModel;

namespace {

std::map<std::string, int64_t> meta_model(const ModelDims& d) {
    return {{"embed_dim", d.embed_dim},   {"layers", d.layers},
            {"heads", d.heads},           {"mlp_hidden", d.mlp_hidden},
            {"conv_base", d.conv_base},   {"dec_hidden", d.dec_hidden},
            {"proj_hidden", d.proj_hidden}, {"proj_dim", d.proj_dim},
            {"horizon", d.horizon},       {"vocab", d.vocab}};
}

void check_horizon(const sim::DatasetManifest& data, const ModelDims& dims) {
    if (data.horizon != dims.horizon) {
        throw ConfigError("dataset horizon " + std::to_string(data.horizon) +
                          " does not match configured horizon " + std::to_string(dims.horizon));
    }
}

int64_t optimizer_steps(size_t samples, int batch_size, int epochs) {
    const int64_t per_epoch =
        static_cast<int64_t>((samples + static_cast<size_t>(batch_size) - 1) /
                             static_cast<size_t>(batch_size));
    return per_epoch * epochs;
}

}  // namespace

ModelDims dims_from_meta(const CheckpointMeta& meta) {
    ModelDims d;
    auto get = [&](const char* k) {
        auto it = meta.model.find(k);
        if (it == meta.model.end()) {
            throw ContractError(std::string("checkpoint missing model field ") + k);
        }
        return static_cast<int>(it->second);
    };
    d.embed_dim = get("embed_dim");
    d.layers = get("layers");
    d.heads = get("heads");
    d.mlp_hidden = get("mlp_hidden");
    d.conv_base = get("conv_base");
    d.dec_hidden = get("dec_hidden");
    d.proj_hidden = get("proj_hidden");
    d.proj_dim = get("proj_dim");
    d.horizon = get("horizon");
    d.vocab = get("vocab");
    return d;
}

std::unique_ptr<TeacherModel> teacher_from_checkpoint(const Checkpoint& ckpt) {
    auto model = TeacherModel::create(dims_from_meta(ckpt.meta), ckpt.meta.seed);
    ckpt.load_into(model->params());
    return model;
}

std::unique_ptr<StudentModel> student_from_checkpoint(const Checkpoint& ckpt) {
    auto model = StudentModel::create(dims_from_meta(ckpt.meta), ckpt.meta.seed);
    ckpt.load_into(model->params());
    return model;
}

Checkpoint train_teacher_ckpt(const sim::DatasetManifest& data, const Config& cfg, uint64_t seed,
                              int threads) {
    if (!data.has_split("train")) {
        throw ConfigError("dataset has no train split");
    }
    const ModelDims dims = model_dims(cfg);
    check_horizon(data, dims);
    const auto train_eps = sim::load_split(data, "train");
    const auto val_eps = sim::load_split(data, "val");

    auto model = TeacherModel::create(dims, seed);
    train::TrainSettings s;
    s.learning_rate = cfg.teacher.learning_rate;
    s.weight_decay = cfg.teacher.weight_decay;
    s.epochs = cfg.teacher.epochs;
    s.batch_size = cfg.teacher.batch_size;
    s.seed = seed;
    s.threads = threads;
    const auto log = train::train_teacher(*model, train_eps, val_eps, s);

    CheckpointMeta meta;
    meta.stage = "teacher";
    meta.config_hash = compute_config_hash(cfg);
    meta.seed = seed;
    meta.creation_step =
        optimizer_steps(train::teacher_samples(train_eps, dims.horizon).size(),
                        cfg.teacher.batch_size, cfg.teacher.epochs);
    meta.metrics["final_train_loss"] = log.back().train_loss;
    if (!std::isnan(log.back().val_loss)) {
        meta.metrics["final_val_loss"] = log.back().val_loss;
    }
    meta.model = meta_model(dims);
    meta.dataset_hash = data.dataset_hash;
    return Checkpoint::from_store(model->params(), meta);
}

Checkpoint pretrain_student_ckpt(const sim::DatasetManifest& data, const Checkpoint& teacher,
                                 const Config& cfg, uint64_t seed, bool no_text, int threads) {
    require_stage(teacher, "teacher");
    if (!data.has_split("train")) {
        throw ConfigError("dataset has no train split");
    }
    const ModelDims dims = model_dims(cfg);
    check_horizon(data, dims);
    auto teacher_model = teacher_from_checkpoint(teacher);
    const auto train_eps = sim::load_split(data, "train");

    auto student = StudentModel::create(dims, seed);
    train::PretrainSettings s;
    s.learning_rate = cfg.pretrain.learning_rate;
    s.weight_decay = cfg.pretrain.weight_decay;
    s.epochs = cfg.pretrain.epochs;
    s.batch_size = cfg.pretrain.batch_size;
    s.seed = seed;
    s.threads = threads;
    s.lambda = cfg.pretrain.lambda;
    s.mask_prob = cfg.pretrain.mask_prob;
    s.no_text = no_text;
    const auto log = train::pretrain_student(*student, *teacher_model, train_eps, s);

    CheckpointMeta meta;
    meta.stage = "pretrained";
    meta.config_hash = compute_config_hash(cfg);
    meta.seed = seed;
    meta.creation_step =
        optimizer_steps(train::stage2_samples(train_eps, dims.horizon).size(),
                        cfg.pretrain.batch_size, cfg.pretrain.epochs);
    meta.metrics["final_bt_loss"] = log.back().train_loss;
    meta.metrics["first_bt_loss"] = log.front().train_loss;
    meta.model = meta_model(dims);
    meta.dataset_hash = data.dataset_hash;
    meta.variant = no_text ? "no_text" : "";
    return Checkpoint::from_store(student->params(), meta);
}

Checkpoint finetune_student_ckpt(const sim::DatasetManifest& data, const Checkpoint& start,
                                 const Config& cfg, uint64_t seed, int threads) {
    if (start.meta.stage != "pretrained" && start.meta.stage != "scratch") {
        throw ContractError("finetune requires a pretrained or scratch checkpoint, got \"" +
                            start.meta.stage + "\"");
    }
    if (!data.has_split("train")) {
        throw ConfigError("dataset has no train split");
    }
    const ModelDims dims = dims_from_meta(start.meta);
    check_horizon(data, dims);
    auto student = student_from_checkpoint(start);
    const auto train_eps = sim::load_split(data, "train");
    const auto val_eps = sim::load_split(data, "val");

    train::FinetuneSettings s;
    s.learning_rate = cfg.finetune.learning_rate;
    s.weight_decay = cfg.finetune.weight_decay;
    s.epochs = cfg.finetune.epochs;
    s.batch_size = cfg.finetune.batch_size;
    s.seed = seed;
    s.threads = threads;
    s.mask_prob = cfg.finetune.mask_prob;
    const auto log = train::finetune_student(*student, train_eps, val_eps, s);

    CheckpointMeta meta;
    meta.stage = "policy";
    meta.config_hash = compute_config_hash(cfg);
    meta.seed = seed;
    meta.creation_step =
        optimizer_steps(train::finetune_samples(train_eps, dims.horizon).size(),
                        cfg.finetune.batch_size, cfg.finetune.epochs);
    meta.metrics["final_train_mse"] = log.back().train_loss;
    if (!std::isnan(log.back().val_loss)) {
        meta.metrics["final_val_mse"] = log.back().val_loss;
    }
    meta.model = meta_model(dims);
    meta.dataset_hash = data.dataset_hash;
    meta.variant = start.meta.variant.empty()
                       ? (start.meta.stage == "scratch" ? "no_pretrain" : "")
                       : start.meta.variant;
    return Checkpoint::from_store(student->params(), meta);
}

Checkpoint scratch_student_ckpt(const Config& cfg, uint64_t seed) {
    const ModelDims dims = model_dims(cfg);
    auto student = StudentModel::create(dims, seed);
    CheckpointMeta meta;
    meta.stage = "scratch";
    meta.config_hash = compute_config_hash(cfg);
    meta.seed = seed;
    meta.model = meta_model(dims);
    return Checkpoint::from_store(student->params(), meta);
}

Trajectory infer_actions(const StudentModel& student, const std::vector<Image>& frames,
                         const std::optional<Waypoint>& goal) {
    return student.observe(frames, goal).second;
}

control::PolicyFn policy_from_student(const StudentModel& student) {
    return [&student](const std::vector<Image>& frames, const std::optional<Waypoint>& goal) {
        return infer_actions(student, frames, goal);
    };
}

}  // namespace n2n::pipeline
