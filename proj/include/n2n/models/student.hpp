#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "n2n/models/teacher.hpp"

namespace n2n::models {

// Stage-2 RGB-only policy. Same token geometry as the teacher but the aux
// slot carries the goal embedding and state tokens use a learned placeholder
// in the action slot. Owns both Barlow Twins projectors (teacher-side and
// student-side); the teacher itself stays frozen during pretraining.
class StudentModel {
public:
    static std::unique_ptr<StudentModel> create(const ModelDims& dims, uint64_t init_seed);

    const ModelDims& dims() const { return dims_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    SequenceLayout layout() const { return SequenceLayout{dims_.horizon}; }

    nn::Var state_token(nn::Tape& t, const Image& frame) const;
    nn::Var assemble(nn::Tape& t, const std::vector<nn::Var>& states, nn::Var goal_emb) const;

    struct Forward {
        nn::Var ctx = nullptr;
        nn::Var traj_flat = nullptr;
        nn::Tensor attention;                   // last-layer head-averaged (optional)
        std::vector<nn::Var> feature_maps;      // per-frame last conv activations (optional)
    };

    struct ForwardOptions {
        bool want_attention = false;
        bool want_features = false;
    };

    // frames ordered oldest -> newest, exactly horizon of them.
    Forward forward(nn::Tape& t, const std::vector<Image>& frames,
                    const std::optional<Waypoint>& goal, ForwardOptions opts = {}) const;

    // Student-side BT projector on a [N, D] ctx batch.
    nn::Var project_student(nn::Tape& t, nn::Var ctx_batch) const;
    // Teacher-side projector (parameters live here, not in the teacher).
    nn::Var project_teacher(nn::Tape& t, nn::Var ctx_batch) const;

    // Plain inference: (ctx, trajectory).
    std::pair<std::vector<double>, Trajectory> observe(const std::vector<Image>& frames,
                                                       const std::optional<Waypoint>& goal) const;

    const VisionEncoder& vision() const { return vision_; }
    const GoalEncoder& goal_encoder() const { return goal_; }

private:
    StudentModel() = default;

    ModelDims dims_;
    nn::ParamStore params_;
    VisionEncoder vision_;
    GoalEncoder goal_;
    FusionHead fuse_;
    TransformerStack tf_;
    nn::ParamId placeholder_action_ = -1;  // [1, D]
    nn::ParamId reg_ = -1;
    nn::ParamId ctx_ = -1;
    nn::ParamId pos_ = -1;
    nn::ParamId dec1_w = -1, dec1_b = -1, dec2_w = -1, dec2_b = -1;
    nn::ParamId proj_s1_w = -1, proj_s1_b = -1, proj_s2_w = -1, proj_s2_b = -1;
    nn::ParamId proj_t1_w = -1, proj_t1_b = -1, proj_t2_w = -1, proj_t2_b = -1;
};

}  // namespace n2n::models
