#include "n2n/models/transformer.hpp"

#include <cmath>

#include "n2n/errors.hpp"

namespace n2n::models {

using nn::ParamStore;
using nn::Tape;
using nn::Tensor;
using nn::Var;

TransformerStack TransformerStack::create(ParamStore& store, const std::string& prefix, int dim,
                                          int layers, int heads, int mlp_hidden, Rng& rng) {
    if (dim % heads != 0) {
        throw ConfigError("transformer: embed_dim must be divisible by heads");
    }
    TransformerStack s;
    s.dim = dim;
    s.heads = heads;
    s.mlp_hidden = mlp_hidden;
    for (int l = 0; l < layers; ++l) {
        const std::string p = prefix + ".l" + std::to_string(l);
        Layer lay;
        lay.ln1_g = store.add(p + ".ln1.g", Tensor::full({dim}, 1.0));
        lay.ln1_b = store.add(p + ".ln1.b", Tensor({dim}));
        lay.qkv_w = store.add(p + ".qkv.w", nn::init_fanin(rng, {dim, 3 * dim}, dim));
        lay.qkv_b = store.add(p + ".qkv.b", Tensor({3 * dim}));
        lay.o_w = store.add(p + ".o.w", nn::init_fanin(rng, {dim, dim}, dim));
        lay.o_b = store.add(p + ".o.b", Tensor({dim}));
        lay.ln2_g = store.add(p + ".ln2.g", Tensor::full({dim}, 1.0));
        lay.ln2_b = store.add(p + ".ln2.b", Tensor({dim}));
        lay.mlp1_w = store.add(p + ".mlp1.w", nn::init_fanin(rng, {dim, mlp_hidden}, dim));
        lay.mlp1_b = store.add(p + ".mlp1.b", Tensor({mlp_hidden}));
        lay.mlp2_w = store.add(p + ".mlp2.w", nn::init_fanin(rng, {mlp_hidden, dim}, mlp_hidden));
        lay.mlp2_b = store.add(p + ".mlp2.b", Tensor({dim}));
        s.layers.push_back(lay);
    }
    s.final_ln_g = store.add(prefix + ".ln.g", Tensor::full({dim}, 1.0));
    s.final_ln_b = store.add(prefix + ".ln.b", Tensor({dim}));
    return s;
}

Var TransformerStack::forward(Tape& t, Var x, Tensor* last_attention) const {
    if (x->val.rank() != 2 || x->val.cols() != dim) {
        throw ContractError("transformer: input must be [L, D]");
    }
    const int L = x->val.rows();
    const int hd = dim / heads;
    const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

    for (size_t li = 0; li < layers.size(); ++li) {
        const Layer& lay = layers[li];
        // Attention block.
        Var normed = t.layer_norm(x, lay.ln1_g, lay.ln1_b, 1e-5);
        Var qkv = t.linear(normed, lay.qkv_w, lay.qkv_b);
        Var q = t.slice_cols(qkv, 0, dim);
        Var k = t.slice_cols(qkv, dim, 2 * dim);
        Var v = t.slice_cols(qkv, 2 * dim, 3 * dim);
        std::vector<Var> head_outs;
        head_outs.reserve(static_cast<size_t>(heads));
        Tensor attn_accum;
        if (last_attention != nullptr && li + 1 == layers.size()) {
            attn_accum = Tensor({L, L});
        }
        for (int h = 0; h < heads; ++h) {
            Var qh = t.slice_cols(q, h * hd, (h + 1) * hd);
            Var kh = t.slice_cols(k, h * hd, (h + 1) * hd);
            Var vh = t.slice_cols(v, h * hd, (h + 1) * hd);
            Var scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt_hd);
            Var attn = t.softmax_rows(scores);
            if (!attn_accum.empty()) {
                for (int i = 0; i < L; ++i) {
                    for (int j = 0; j < L; ++j) {
                        attn_accum.at(i, j) += attn->val.at(i, j) / heads;
                    }
                }
            }
            head_outs.push_back(t.matmul(attn, vh));
        }
        if (!attn_accum.empty()) {
            *last_attention = attn_accum;
        }
        Var merged = t.concat_cols(head_outs);
        Var attended = t.linear(merged, lay.o_w, lay.o_b);
        x = t.add(x, attended);

        // MLP block.
        Var normed2 = t.layer_norm(x, lay.ln2_g, lay.ln2_b, 1e-5);
        Var h1 = t.gelu(t.linear(normed2, lay.mlp1_w, lay.mlp1_b));
        Var h2 = t.linear(h1, lay.mlp2_w, lay.mlp2_b);
        x = t.add(x, h2);
    }
    return t.layer_norm(x, final_ln_g, final_ln_b, 1e-5);
}

}  // namespace n2n::models
