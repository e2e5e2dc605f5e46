#include "n2n/models/encoders.hpp"

#include "n2n/errors.hpp"

namespace n2n::models {

using nn::ParamStore;
using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

constexpr double kFusionLnEps = 1e-12;

Tensor image_to_chw(const Image& img) {
    Tensor t({img.c, img.h, img.w});
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            for (int ch = 0; ch < img.c; ++ch) {
                t.at(ch, y, x) = static_cast<double>(img.at(y, x, ch));
            }
        }
    }
    return t;
}

}  // namespace

VisionEncoder VisionEncoder::create(ParamStore& store, const std::string& prefix,
                                    const EncoderDims& dims, Rng& rng) {
    VisionEncoder e;
    int in_ch = 3;
    for (int i = 0; i < 4; ++i) {
        const int out_ch = dims.conv_base << i;
        e.conv_w[static_cast<size_t>(i)] =
            store.add(prefix + ".conv" + std::to_string(i) + ".w",
                      nn::init_fanin(rng, {out_ch, in_ch, 3, 3}, in_ch * 9));
        e.conv_b[static_cast<size_t>(i)] =
            store.add(prefix + ".conv" + std::to_string(i) + ".b", Tensor({out_ch}));
        in_ch = out_ch;
    }
    e.head_w = store.add(prefix + ".head.w", nn::init_fanin(rng, {in_ch, dims.embed_dim}, in_ch));
    e.head_b = store.add(prefix + ".head.b", Tensor({dims.embed_dim}));
    return e;
}

Var VisionEncoder::encode(Tape& t, const Image& img, Var* feature_map) const {
    if (img.c != 3) {
        throw ContractError("encode_image: expected 3-channel image");
    }
    if (img.h < 16 || img.w < 16) {
        throw ContractError("encode_image: image too small");
    }
    Var x = t.input(image_to_chw(img), false);
    for (int i = 0; i < 4; ++i) {
        x = t.conv2d_s2(x, conv_w[static_cast<size_t>(i)], conv_b[static_cast<size_t>(i)]);
        x = t.relu(x);
    }
    if (feature_map != nullptr) {
        *feature_map = x;
    }
    Var pooled = t.global_avg_pool(x);
    return t.linear(pooled, head_w, head_b);
}

WaypointEncoder WaypointEncoder::create(ParamStore& store, const std::string& prefix,
                                        const EncoderDims& dims, Rng& rng) {
    WaypointEncoder e;
    e.w = store.add(prefix + ".w", nn::init_fanin(rng, {2, dims.embed_dim}, 2));
    e.b = store.add(prefix + ".b", Tensor({dims.embed_dim}));
    return e;
}

Var WaypointEncoder::embed(Tape& t, const Waypoint& a) const {
    if (!std::isfinite(a.x) || !std::isfinite(a.y)) {
        throw ContractError("embed_waypoint: non-finite waypoint");
    }
    Var in = t.input(Tensor({1, 2}, {a.x, a.y}), false);
    return t.linear(in, w, b);
}

TextEncoder TextEncoder::create(ParamStore& store, const std::string& prefix,
                                const EncoderDims& dims, Rng& rng) {
    TextEncoder e;
    e.table = store.add(prefix + ".table", nn::init_normal(rng, {dims.vocab, dims.embed_dim}, 0.02));
    e.proj_w = store.add(prefix + ".proj.w",
                         nn::init_fanin(rng, {dims.embed_dim, dims.embed_dim}, dims.embed_dim));
    e.proj_b = store.add(prefix + ".proj.b", Tensor({dims.embed_dim}));
    e.null_text = store.add(prefix + ".null", nn::init_normal(rng, {1, dims.embed_dim}, 0.02));
    return e;
}

Var TextEncoder::encode(Tape& t, const std::vector<int>& tokens) const {
    if (tokens.empty()) {
        return t.param(null_text);
    }
    const int vocab = t.params().value(table).rows();
    for (int id : tokens) {
        if (id < 0 || id >= vocab) {
            throw ContractError("encode_text: token id outside vocabulary");
        }
    }
    Var pooled = t.embedding_mean(tokens, table);
    return t.linear(pooled, proj_w, proj_b);
}

GoalEncoder GoalEncoder::create(ParamStore& store, const std::string& prefix,
                                const EncoderDims& dims, Rng& rng) {
    GoalEncoder e;
    e.w = store.add(prefix + ".w", nn::init_fanin(rng, {2, dims.embed_dim}, 2));
    e.b = store.add(prefix + ".b", Tensor({dims.embed_dim}));
    e.type_provided = store.add(prefix + ".type_provided",
                                nn::init_normal(rng, {1, dims.embed_dim}, 0.02));
    e.type_masked = store.add(prefix + ".type_masked",
                              nn::init_normal(rng, {1, dims.embed_dim}, 0.02));
    return e;
}

Var GoalEncoder::encode(Tape& t, const std::optional<Waypoint>& goal) const {
    if (!goal.has_value()) {
        return t.param(type_masked);
    }
    if (!std::isfinite(goal->x) || !std::isfinite(goal->y)) {
        throw ContractError("encode_goal: non-finite goal");
    }
    Var in = t.input(Tensor({1, 2}, {goal->x, goal->y}), false);
    Var affine = t.linear(in, w, b);
    return t.add(affine, t.param(type_provided));
}

FusionHead FusionHead::create(ParamStore& store, const std::string& prefix,
                              const EncoderDims& dims, Rng& rng) {
    FusionHead e;
    e.w = store.add(prefix + ".w",
                    nn::init_fanin(rng, {2 * dims.embed_dim, dims.embed_dim}, 2 * dims.embed_dim));
    e.b = store.add(prefix + ".b", Tensor({dims.embed_dim}));
    return e;
}

Var FusionHead::fuse(Tape& t, Var action_emb, Var image_emb) const {
    if (action_emb->val.cols() != image_emb->val.cols() || action_emb->val.rows() != 1 ||
        image_emb->val.rows() != 1) {
        throw ContractError("fuse_state: embedding length mismatch");
    }
    Var cat = t.concat_cols({action_emb, image_emb});
    Var lin = t.linear(cat, w, b);
    Var act = t.gelu(lin);
    return t.layer_norm(act, -1, -1, kFusionLnEps);
}

std::vector<double> value_of(Var v) { return v->val.v; }

}  // namespace n2n::models
