#pragma once

#include <string>
#include <vector>

#include "n2n/autodiff.hpp"
#include "n2n/rng.hpp"

namespace n2n::models {

// Pre-norm transformer encoder stack with full bidirectional attention and a
// final layer norm. Width D, H heads, GELU MLP.
struct TransformerStack {
    struct Layer {
        nn::ParamId ln1_g, ln1_b;
        nn::ParamId qkv_w, qkv_b;  // [D, 3D]
        nn::ParamId o_w, o_b;      // [D, D]
        nn::ParamId ln2_g, ln2_b;
        nn::ParamId mlp1_w, mlp1_b;  // [D, M]
        nn::ParamId mlp2_w, mlp2_b;  // [M, D]
    };

    int dim = 0;
    int heads = 0;
    int mlp_hidden = 0;
    std::vector<Layer> layers;
    nn::ParamId final_ln_g = -1;
    nn::ParamId final_ln_b = -1;

    static TransformerStack create(nn::ParamStore& store, const std::string& prefix, int dim,
                                   int layers, int heads, int mlp_hidden, Rng& rng);

    // x: [L, D]. If last_attention is non-null, it receives the final layer's
    // head-averaged attention matrix [L, L] (softmax values).
    nn::Var forward(nn::Tape& t, nn::Var x, nn::Tensor* last_attention = nullptr) const;
};

}  // namespace n2n::models
