#pragma once

#include <memory>
#include <vector>

#include "n2n/models/encoders.hpp"
#include "n2n/models/transformer.hpp"
#include "n2n/sim/narrate.hpp"

namespace n2n::models {

struct ModelDims {
    int embed_dim = 256;
    int layers = 6;
    int heads = 8;
    int mlp_hidden = 1024;
    int conv_base = 16;
    int dec_hidden = 512;
    int proj_hidden = 512;  // BT projector (student side machinery)
    int proj_dim = 128;
    int horizon = 5;  // H_f == H_p
    int vocab = sim::kVocabSize;

    void validate() const;
};

// Token layout shared by teacher and student: [reg, state_1..state_H, aux, ctx].
struct SequenceLayout {
    int horizon;
    int length() const { return horizon + 3; }
    int reg_index() const { return 0; }
    int state_index(int k) const { return 1 + k; }
    int aux_index() const { return horizon + 1; }
    int ctx_index() const { return horizon + 2; }
};

// Stage-1 cross-modal transformer: autoencodes the waypoint trajectory
// conditioned on frames and narration; the ctx output is the distillation
// target for stage 2.
class TeacherModel {
public:
    static std::unique_ptr<TeacherModel> create(const ModelDims& dims, uint64_t init_seed);

    const ModelDims& dims() const { return dims_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    SequenceLayout layout() const { return SequenceLayout{dims_.horizon}; }

    // One fused state token from a frame and its paired waypoint.
    nn::Var state_token(nn::Tape& t, const Image& frame, const Waypoint& wp) const;

    // [reg, states.., aux, ctx] + P. Throws ContractError when the state count
    // does not equal the configured horizon.
    nn::Var assemble(nn::Tape& t, const std::vector<nn::Var>& states, nn::Var aux) const;

    struct Forward {
        nn::Var ctx = nullptr;        // [1, D] final-layer ctx output
        nn::Var traj_flat = nullptr;  // [1, 2H] decoded waypoints
        nn::Tensor attention;         // last-layer head-averaged attention (optional)
    };

    Forward forward_from_sequence(nn::Tape& t, nn::Var seq, bool want_attention = false) const;

    // Full graph from raw inputs; narration may be empty (null-text vector).
    Forward forward(nn::Tape& t, const std::vector<Image>& frames, const Trajectory& waypoints,
                    const sim::Narration& narration, bool want_attention = false) const;

    // Plain inference wrapper.
    std::pair<Trajectory, std::vector<double>> predict(const std::vector<Image>& frames,
                                                       const Trajectory& waypoints,
                                                       const sim::Narration& narration) const;

    static Trajectory traj_from_flat(const nn::Tensor& flat, int horizon);

    const VisionEncoder& vision() const { return vision_; }
    const WaypointEncoder& waypoint_encoder() const { return wp_; }
    const TextEncoder& text_encoder() const { return text_; }
    const FusionHead& fusion() const { return fuse_; }
    const TransformerStack& transformer() const { return tf_; }

private:
    TeacherModel() = default;

    ModelDims dims_;
    nn::ParamStore params_;
    VisionEncoder vision_;
    WaypointEncoder wp_;
    TextEncoder text_;
    FusionHead fuse_;
    TransformerStack tf_;
    nn::ParamId reg_ = -1;
    nn::ParamId ctx_ = -1;
    nn::ParamId pos_ = -1;  // [L, D]
    nn::ParamId dec1_w = -1, dec1_b = -1, dec2_w = -1, dec2_b = -1;
};

}  // namespace n2n::models
