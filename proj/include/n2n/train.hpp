#pragma once

#include <optional>
#include <vector>

#include "n2n/models/student.hpp"
#include "n2n/models/teacher.hpp"
#include "n2n/sim/dataset.hpp"

namespace n2n::train {

// Gradients accumulate into a fixed number of logical buckets (sample index
// mod kGradBuckets) reduced in bucket order, so results are bit-identical for
// any OS thread count.
constexpr int kGradBuckets = 4;

struct TrainSettings {
    double learning_rate = 2e-4;
    double weight_decay = 0.01;
    int epochs = 20;
    int batch_size = 32;
    uint64_t seed = 42;
    int threads = 2;
};

struct PretrainSettings {
    double learning_rate = 2e-4;
    double weight_decay = 0.01;
    int epochs = 20;
    int batch_size = 32;
    uint64_t seed = 42;
    int threads = 2;
    double lambda = 5e-3;
    double mask_prob = 0.5;
    bool no_text = false;
};

struct FinetuneSettings : TrainSettings {
    double mask_prob = 0.5;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN when no validation ran
};

struct SampleRef {
    int episode = 0;
    int t = 0;
};

// Valid sample anchors per stage.
std::vector<SampleRef> teacher_samples(const std::vector<sim::Episode>& eps, int horizon);
std::vector<SampleRef> stage2_samples(const std::vector<sim::Episode>& eps, int horizon);
std::vector<SampleRef> finetune_samples(const std::vector<sim::Episode>& eps, int horizon);

// Episode goal re-expressed in the body frame at step t.
Waypoint goal_at_step(const sim::Episode& ep, int t);

// Stage 1: supervised trajectory autoencoding; loss is coordinate-mean MSE.
std::vector<EpochLog> train_teacher(models::TeacherModel& model,
                                    const std::vector<sim::Episode>& train_eps,
                                    const std::vector<sim::Episode>& val_eps,
                                    const TrainSettings& s);

// Stage 2a: Barlow Twins alignment of projected ctx tokens against the frozen
// teacher. Returns per-epoch BT losses; the teacher is never written to.
std::vector<EpochLog> pretrain_student(models::StudentModel& student,
                                       const models::TeacherModel& teacher,
                                       const std::vector<sim::Episode>& train_eps,
                                       const PretrainSettings& s);

// Stage 2b: supervised MSE fine-tuning with continued goal masking.
std::vector<EpochLog> finetune_student(models::StudentModel& student,
                                       const std::vector<sim::Episode>& train_eps,
                                       const std::vector<sim::Episode>& val_eps,
                                       const FinetuneSettings& s);

// Mean coordinate MSE of the student over samples of a split (no updates).
double eval_student_mse(const models::StudentModel& student,
                        const std::vector<sim::Episode>& eps, int threads);

}  // namespace n2n::train
