#include "n2n/models/teacher.hpp"

#include "n2n/errors.hpp"

namespace n2n::models {

using nn::Tape;
using nn::Tensor;
using nn::Var;

void ModelDims::validate() const {
    if (embed_dim < 8 || layers < 1 || heads < 1 || mlp_hidden < 8) {
        throw ConfigError("model dims too small");
    }
    if (embed_dim % heads != 0) {
        throw ConfigError("embed_dim must be divisible by heads");
    }
    if (horizon < 1) {
        throw ConfigError("horizon must be >= 1");
    }
    if (conv_base < 1 || dec_hidden < 2 || proj_hidden < 2 || proj_dim < 2) {
        throw ConfigError("model head dims too small");
    }
}

std::unique_ptr<TeacherModel> TeacherModel::create(const ModelDims& dims, uint64_t init_seed) {
    dims.validate();
    auto m = std::unique_ptr<TeacherModel>(new TeacherModel());
    m->dims_ = dims;
    Rng rng(Rng::mix(init_seed, 0x7e4c));
    EncoderDims ed{dims.embed_dim, dims.conv_base, dims.vocab};
    m->vision_ = VisionEncoder::create(m->params_, "vision", ed, rng);
    m->wp_ = WaypointEncoder::create(m->params_, "waypoint", ed, rng);
    m->text_ = TextEncoder::create(m->params_, "text", ed, rng);
    m->fuse_ = FusionHead::create(m->params_, "fusion", ed, rng);
    m->tf_ = TransformerStack::create(m->params_, "tf", dims.embed_dim, dims.layers, dims.heads,
                                      dims.mlp_hidden, rng);
    const SequenceLayout lay{dims.horizon};
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
    return m;
}

Var TeacherModel::state_token(Tape& t, const Image& frame, const Waypoint& wp) const {
    Var a = wp_.embed(t, wp);
    Var i = vision_.encode(t, frame);
    return fuse_.fuse(t, a, i);
}

Var TeacherModel::assemble(Tape& t, const std::vector<Var>& states, Var aux) const {
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
    rows.push_back(aux);
    rows.push_back(t.param(ctx_));
    Var tokens = t.stack_rows(rows);
    return t.add(tokens, t.param(pos_));
}

TeacherModel::Forward TeacherModel::forward_from_sequence(Tape& t, Var seq,
                                                          bool want_attention) const {
    const SequenceLayout lay = layout();
    if (seq->val.rows() != lay.length() || seq->val.cols() != dims_.embed_dim) {
        throw ContractError("teacher_forward: sequence shape mismatch");
    }
    Forward out;
    Var encoded = tf_.forward(t, seq, want_attention ? &out.attention : nullptr);
    out.ctx = t.row(encoded, lay.ctx_index());
    Var h = t.gelu(t.linear(out.ctx, dec1_w, dec1_b));
    out.traj_flat = t.linear(h, dec2_w, dec2_b);
    return out;
}

TeacherModel::Forward TeacherModel::forward(Tape& t, const std::vector<Image>& frames,
                                            const Trajectory& waypoints,
                                            const sim::Narration& narration,
                                            bool want_attention) const {
    if (static_cast<int>(frames.size()) != dims_.horizon ||
        waypoints.size() != frames.size()) {
        throw ContractError("teacher forward: need horizon frames and waypoints");
    }
    std::vector<Var> states;
    states.reserve(frames.size());
    for (size_t k = 0; k < frames.size(); ++k) {
        states.push_back(state_token(t, frames[k], waypoints[k]));
    }
    Var text = text_.encode(t, narration.all_tokens());
    Var seq = assemble(t, states, text);
    return forward_from_sequence(t, seq, want_attention);
}

Trajectory TeacherModel::traj_from_flat(const Tensor& flat, int horizon) {
    Trajectory traj;
    traj.reserve(static_cast<size_t>(horizon));
    for (int k = 0; k < horizon; ++k) {
        traj.push_back({flat.v[static_cast<size_t>(2 * k)], flat.v[static_cast<size_t>(2 * k + 1)]});
    }
    return traj;
}

std::pair<Trajectory, std::vector<double>> TeacherModel::predict(
    const std::vector<Image>& frames, const Trajectory& waypoints,
    const sim::Narration& narration) const {
    Tape t(params_, nullptr);
    Forward f = forward(t, frames, waypoints, narration);
    return {traj_from_flat(f.traj_flat->val, dims_.horizon), f.ctx->val.v};
}

}  // namespace n2n::models
