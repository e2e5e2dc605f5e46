#pragma once

#include <memory>

#include "n2n/checkpoint.hpp"
#include "n2n/config.hpp"
#include "n2n/controller.hpp"
#include "n2n/train.hpp"

namespace n2n::pipeline {

// Checkpoint-level wrappers tying datasets, configs and the training loops
// together. All of them stamp config/dataset hashes and the stage tag.

Checkpoint train_teacher_ckpt(const sim::DatasetManifest& data, const Config& cfg, uint64_t seed,
                              int threads);

Checkpoint pretrain_student_ckpt(const sim::DatasetManifest& data, const Checkpoint& teacher,
                                 const Config& cfg, uint64_t seed, bool no_text, int threads);

Checkpoint finetune_student_ckpt(const sim::DatasetManifest& data, const Checkpoint& start,
                                 const Config& cfg, uint64_t seed, int threads);

// Randomly initialized student (stage "scratch") for the BC baseline.
Checkpoint scratch_student_ckpt(const Config& cfg, uint64_t seed);

std::unique_ptr<models::TeacherModel> teacher_from_checkpoint(const Checkpoint& ckpt);
std::unique_ptr<models::StudentModel> student_from_checkpoint(const Checkpoint& ckpt);

// Pure inference wrapper over a stage-"policy" checkpoint.
Trajectory infer_actions(const models::StudentModel& student, const std::vector<Image>& frames,
                         const std::optional<Waypoint>& goal);
control::PolicyFn policy_from_student(const models::StudentModel& student);

models::ModelDims dims_from_meta(const CheckpointMeta& meta);

}  // namespace n2n::pipeline
