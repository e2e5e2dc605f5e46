#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "n2n/autodiff.hpp"
#include "n2n/geometry.hpp"
#include "n2n/image.hpp"
#include "n2n/rng.hpp"
#include "n2n/sim/narrate.hpp"

namespace n2n::models {

struct EncoderDims {
    int embed_dim = 256;
    int conv_base = 16;  // conv channels: base, 2x, 4x, 8x
    int vocab = sim::kVocabSize;
};

// Four stride-2 conv blocks with ReLU, global average pool, linear head.
// Works for any input size >= 16x16.
struct VisionEncoder {
    std::array<nn::ParamId, 4> conv_w{};
    std::array<nn::ParamId, 4> conv_b{};
    nn::ParamId head_w = -1;
    nn::ParamId head_b = -1;

    static VisionEncoder create(nn::ParamStore& store, const std::string& prefix,
                                const EncoderDims& dims, Rng& rng);

    // Returns [1, D]; if feature_map is non-null it receives the last conv
    // activation (pre-pool), shape [C', H', W'].
    nn::Var encode(nn::Tape& t, const Image& img, nn::Var* feature_map = nullptr) const;
};

// Affine map of body-frame (x, y) into the embedding space.
struct WaypointEncoder {
    nn::ParamId w = -1;  // [2, D]
    nn::ParamId b = -1;  // [D]

    static WaypointEncoder create(nn::ParamStore& store, const std::string& prefix,
                                  const EncoderDims& dims, Rng& rng);
    nn::Var embed(nn::Tape& t, const Waypoint& a) const;
};

// Mean-pooled trainable token embeddings with a linear projection; the empty
// narration maps to a learned null-text vector.
struct TextEncoder {
    nn::ParamId table = -1;   // [V, D]
    nn::ParamId proj_w = -1;  // [D, D]
    nn::ParamId proj_b = -1;  // [D]
    nn::ParamId null_text = -1;  // [1, D]

    static TextEncoder create(nn::ParamStore& store, const std::string& prefix,
                              const EncoderDims& dims, Rng& rng);
    nn::Var encode(nn::Tape& t, const std::vector<int>& tokens) const;
};

// Affine goal embedding plus additive learned type vectors. A masked goal is
// exactly the masked-type vector; coordinates are ignored.
struct GoalEncoder {
    nn::ParamId w = -1;  // [2, D]
    nn::ParamId b = -1;  // [D]
    nn::ParamId type_provided = -1;  // [1, D]
    nn::ParamId type_masked = -1;    // [1, D]

    static GoalEncoder create(nn::ParamStore& store, const std::string& prefix,
                              const EncoderDims& dims, Rng& rng);
    nn::Var encode(nn::Tape& t, const std::optional<Waypoint>& goal) const;
};

// Shared-latent fusion: concat -> linear -> GELU -> layer norm (no affine),
// so outputs always have zero mean and unit variance across dimensions.
struct FusionHead {
    nn::ParamId w = -1;  // [2D, D]
    nn::ParamId b = -1;  // [D]

    static FusionHead create(nn::ParamStore& store, const std::string& prefix,
                             const EncoderDims& dims, Rng& rng);
    nn::Var fuse(nn::Tape& t, nn::Var action_emb, nn::Var image_emb) const;
};

// Plain-value helpers (build a throwaway tape; inference only).
std::vector<double> value_of(nn::Var v);

}  // namespace n2n::models
