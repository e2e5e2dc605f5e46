#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "n2n/params.hpp"
#include "n2n/tensor.hpp"

namespace n2n::nn {

struct Node {
    Tensor val;
    Tensor grad;  // allocated lazily during backward
    bool needs_grad = false;
    std::function<void()> back;  // empty for leaves
};

using Var = Node*;

// Reverse-mode tape. Graphs are built strictly forward, so reverse creation
// order is a valid topological order for backward. Parameter values are read
// from the bound ParamStore; parameter gradients accumulate into the bound
// GradBuffer (pass nullptr for inference or for a frozen model).
class Tape {
public:
    Tape(const ParamStore& params, GradBuffer* sink) : params_(&params), sink_(sink) {}

    const ParamStore& params() const { return *params_; }
    bool accumulates() const { return sink_ != nullptr; }

    // ---- leaves ----
    Var input(Tensor t, bool needs_grad = false);
    Var constant(Tensor t) { return input(std::move(t), false); }
    Var param(ParamId id);  // copies the tensor; intended for small vectors

    // ---- parameter ops (read the store directly) ----
    Var linear(Var x, ParamId w, ParamId b);  // x:[N,I], w:[I,O], b:[O] or -1
    Var conv2d_s2(Var x, ParamId w, ParamId b);  // x:[Cin,H,W], w:[Cout,Cin,3,3]
    Var embedding_mean(const std::vector<int>& token_ids, ParamId table);  // -> [1,D]
    Var layer_norm(Var x, ParamId gamma, ParamId beta, double eps);  // rows; ids may be -1

    // ---- elementwise / broadcast ----
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var add_rowvec(Var x, Var r);  // x:[N,D] + r:[1,D]
    Var sub_rowvec(Var x, Var r);
    Var div_rowvec(Var x, Var r);
    Var sqrt_ev(Var x);
    Var relu(Var x);
    Var gelu(Var x);
    Var tanh_ev(Var x);

    // ---- matrix ----
    Var matmul(Var a, Var b);     // [N,K]x[K,M]
    Var matmul_nt(Var a, Var b);  // [N,K]x[M,K]^T -> [N,M]
    Var matmul_tn(Var a, Var b);  // [N,K]^T x [N,M] -> [K,M]
    Var softmax_rows(Var x);

    // ---- shape ----
    Var slice_cols(Var x, int c0, int c1);
    Var row(Var x, int i);
    Var stack_rows(const std::vector<Var>& rows);
    Var concat_cols(const std::vector<Var>& parts);
    Var global_avg_pool(Var x);  // [C,H,W] -> [1,C]

    // ---- reductions ----
    Var col_mean(Var x);  // [N,K] -> [1,K]
    Var sum_all(Var x);   // -> [1,1]
    Var mean_all(Var x);  // -> [1,1]
    Var mse(Var a, Var b);  // mean squared difference -> [1,1]

    // ---- backward ----
    void backward(Var loss);         // seeds d(loss)=1
    void backward_seeded(Var node);  // node->grad already set by the caller

    size_t node_count() const { return nodes_.size(); }

private:
    Var make(Tensor val, bool needs_grad);
    static void ensure_grad(Var n);
    bool param_grads() const { return sink_ != nullptr; }
    double* sink_grad(ParamId id) { return sink_->grad(id); }

    const ParamStore* params_;
    GradBuffer* sink_;
    std::deque<std::unique_ptr<Node>> nodes_;
};

}  // namespace n2n::nn
