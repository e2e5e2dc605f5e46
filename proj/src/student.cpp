#include "n2n/models/student.hpp"

#include "n2n/errors.hpp"

namespace n2n::models {

using nn::Tape;
using nn::Tensor;
using nn::Var;

std::unique_ptr<StudentModel> StudentModel::create(const ModelDims& dims, uint64_t init_seed) {
    dims.validate();
    auto m = std::unique_ptr<StudentModel>(new StudentModel());
    m->dims_ = dims;
    Rng rng(Rng::mix(init_seed, 0x57d0));
    EncoderDims ed{dims.embed_dim, dims.conv_base, dims.vocab};
    m->vision_ = VisionEncoder::create(m->params_, "vision", ed, rng);
    m->goal_ = GoalEncoder::create(m->params_, "goal", ed, rng);
    m->fuse_ = FusionHead::create(m->params_, "fusion", ed, rng);
    m->tf_ = TransformerStack::create(m->params_, "tf", dims.embed_dim, dims.layers, dims.heads,
                                      dims.mlp_hidden, rng);
    const SequenceLayout lay{dims.horizon};
    m->placeholder_action_ =
        m->params_.add("tokens.placeholder_action", nn::init_normal(rng, {1, dims.embed_dim}, 0.02));
    m->reg_ = m->params_.add("tokens.reg", nn::init_normal(rng, {1, dims.embed_dim}, 0.02));
    m->ctx_ = m->params_.add("tokens.ctx", nn::init_normal(rng, {1, dims.embed_dim}, 0.02));
    m->pos_ = m->params_.add("tokens.pos",
                             nn::init_normal(rng, {lay.length(), dims.embed_dim}, 0.02));
    m->dec1_w = m->params_.add("decoder.fc1.w",
                               nn::init_fanin(rng, {dims.embed_dim, dims.dec_hidden},
                                              dims.embed_dim));
    m->dec1_b = m->params_.add("decoder.fc1.b", Tensor({dims.dec_hidden}));
    m->dec2_w = m->params_.add("decoder.fc2.w",
                               nn::init_fanin(rng, {dims.dec_hidden, 2 * dims.horizon},
                                              dims.dec_hidden));
    m->dec2_b = m->params_.add("decoder.fc2.b", Tensor({2 * dims.horizon}));

    m->proj_s1_w = m->params_.add("bt.proj_s.fc1.w",
                                  nn::init_fanin(rng, {dims.embed_dim, dims.proj_hidden},
                                                 dims.embed_dim));
    m->proj_s1_b = m->params_.add("bt.proj_s.fc1.b", Tensor({dims.proj_hidden}));
    m->proj_s2_w = m->params_.add("bt.proj_s.fc2.w",
                                  nn::init_fanin(rng, {dims.proj_hidden, dims.proj_dim},
                                                 dims.proj_hidden));
    m->proj_s2_b = m->params_.add("bt.proj_s.fc2.b", Tensor({dims.proj_dim}));
    m->proj_t1_w = m->params_.add("bt.proj_t.fc1.w",
                                  nn::init_fanin(rng, {dims.embed_dim, dims.proj_hidden},
                                                 dims.embed_dim));
    m->proj_t1_b = m->params_.add("bt.proj_t.fc1.b", Tensor({dims.proj_hidden}));
    m->proj_t2_w = m->params_.add("bt.proj_t.fc2.w",
                                  nn::init_fanin(rng, {dims.proj_hidden, dims.proj_dim},
                                                 dims.proj_hidden));
    m->proj_t2_b = m->params_.add("bt.proj_t.fc2.b", Tensor({dims.proj_dim}));
    return m;
}

Var StudentModel::state_token(Tape& t, const Image& frame) const {
    Var a = t.param(placeholder_action_);
    Var i = vision_.encode(t, frame);
    return fuse_.fuse(t, a, i);
}

Var StudentModel::assemble(Tape& t, const std::vector<Var>& states, Var goal_emb) const {
    if (states.empty()) {
        throw ContractError("assemble: empty state list");
    }
    if (static_cast<int>(states.size()) != dims_.horizon) {
        throw ContractError("assemble: state count must equal the configured horizon");
    }
    std::vector<Var> rows;
    rows.reserve(states.size() + 3);
    rows.push_back(t.param(reg_));
    for (Var s : states) {
        rows.push_back(s);
    }
    rows.push_back(goal_emb);
    rows.push_back(t.param(ctx_));
    Var tokens = t.stack_rows(rows);
    return t.add(tokens, t.param(pos_));
}

StudentModel::Forward StudentModel::forward(Tape& t, const std::vector<Image>& frames,
                                            const std::optional<Waypoint>& goal,
                                            ForwardOptions opts) const {
    if (static_cast<int>(frames.size()) != dims_.horizon) {
        throw ContractError("student_observe: expected exactly horizon frames");
    }
    Forward out;
    std::vector<Var> states;
    states.reserve(frames.size());
    for (const Image& frame : frames) {
        if (opts.want_features) {
            Var fm = nullptr;
            Var a = t.param(placeholder_action_);
            Var i = vision_.encode(t, frame, &fm);
            out.feature_maps.push_back(fm);
            states.push_back(fuse_.fuse(t, a, i));
        } else {
            states.push_back(state_token(t, frame));
        }
    }
    Var goal_emb = goal_.encode(t, goal);
    Var seq = assemble(t, states, goal_emb);
    const SequenceLayout lay = layout();
    Var encoded = tf_.forward(t, seq, opts.want_attention ? &out.attention : nullptr);
    out.ctx = t.row(encoded, lay.ctx_index());
    Var h = t.gelu(t.linear(out.ctx, dec1_w, dec1_b));
    out.traj_flat = t.linear(h, dec2_w, dec2_b);
    return out;
}

Var StudentModel::project_student(Tape& t, Var ctx_batch) const {
    Var h = t.gelu(t.linear(ctx_batch, proj_s1_w, proj_s1_b));
    return t.linear(h, proj_s2_w, proj_s2_b);
}

Var StudentModel::project_teacher(Tape& t, Var ctx_batch) const {
    Var h = t.gelu(t.linear(ctx_batch, proj_t1_w, proj_t1_b));
    return t.linear(h, proj_t2_w, proj_t2_b);
}

std::pair<std::vector<double>, Trajectory> StudentModel::observe(
    const std::vector<Image>& frames, const std::optional<Waypoint>& goal) const {
    Tape t(params_, nullptr);
    Forward f = forward(t, frames, goal);
    return {f.ctx->val.v, TeacherModel::traj_from_flat(f.traj_flat->val, dims_.horizon)};
}

}  // namespace n2n::models
