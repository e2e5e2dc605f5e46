#include "n2n/autodiff.hpp"

#include <cmath>

#include "n2n/errors.hpp"

namespace n2n::nn {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) {
        throw ContractError(msg);
    }
}

// c += a * b, a:[N,K] b:[K,M] c:[N,M]
void gemm_acc(const double* a, const double* b, double* c, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) {
                continue;
            }
            const double* bp = b + static_cast<size_t>(p) * m;
            for (int j = 0; j < m; ++j) {
                ci[j] += av * bp[j];
            }
        }
    }
}

// c += a * b^T, a:[N,K] b:[M,K] c:[N,M]
void gemm_nt_acc(const double* a, const double* b, double* c, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        double* ci = c + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* bj = b + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) {
                acc += ai[p] * bj[p];
            }
            ci[j] += acc;
        }
    }
}

// c += a^T * b, a:[N,K] b:[N,M] c:[K,M]
void gemm_tn_acc(const double* a, const double* b, double* c, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<size_t>(i) * k;
        const double* bi = b + static_cast<size_t>(i) * m;
        for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) {
                continue;
            }
            double* cp = c + static_cast<size_t>(p) * m;
            for (int j = 0; j < m; ++j) {
                cp[j] += av * bi[j];
            }
        }
    }
}

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Var Tape::make(Tensor val, bool needs_grad) {
    nodes_.push_back(std::make_unique<Node>());
    Node* n = nodes_.back().get();
    n->val = std::move(val);
    n->needs_grad = needs_grad;
    return n;
}

void Tape::ensure_grad(Var n) {
    if (n->grad.empty()) {
        n->grad = Tensor(n->val.shape);
    }
}

Var Tape::input(Tensor t, bool needs_grad) {
    return make(std::move(t), needs_grad);
}

Var Tape::param(ParamId id) {
    Var out = make(params_->value(id), param_grads());
    if (param_grads()) {
        Tape* tp = this;
        out->back = [out, id, tp] {
            double* g = tp->sink_grad(id);
            for (int64_t i = 0; i < out->grad.size(); ++i) {
                g[i] += out->grad.v[static_cast<size_t>(i)];
            }
        };
    }
    return out;
}

Var Tape::linear(Var x, ParamId w, ParamId b) {
    const Tensor& wt = params_->value(w);
    check(x->val.rank() == 2 && wt.rank() == 2, "linear: rank mismatch");
    check(x->val.cols() == wt.rows(), "linear: inner dim mismatch");
    const int n = x->val.rows();
    const int in = wt.rows();
    const int out_dim = wt.cols();

    Tensor y({n, out_dim});
    gemm_acc(x->val.v.data(), wt.v.data(), y.v.data(), n, in, out_dim);
    if (b >= 0) {
        const Tensor& bt = params_->value(b);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < out_dim; ++j) {
                y.at(i, j) += bt.v[static_cast<size_t>(j)];
            }
        }
    }

    Var o = make(std::move(y), x->needs_grad || param_grads());
    if (o->needs_grad) {
        Tape* tp = this;
        o->back = [o, x, w, b, n, in, out_dim, tp] {
            const Tensor& wt2 = tp->params_->value(w);
            if (x->needs_grad) {
                ensure_grad(x);
                gemm_nt_acc(o->grad.v.data(), wt2.v.data(), x->grad.v.data(), n, out_dim, in);
            }
            if (tp->param_grads()) {
                gemm_tn_acc(x->val.v.data(), o->grad.v.data(), tp->sink_grad(w), n, in, out_dim);
                if (b >= 0) {
                    double* gb = tp->sink_grad(b);
                    for (int i = 0; i < n; ++i) {
                        for (int j = 0; j < out_dim; ++j) {
                            gb[j] += o->grad.at(i, j);
                        }
                    }
                }
            }
        };
    }
    return o;
}

Var Tape::conv2d_s2(Var x, ParamId w, ParamId b) {
    const Tensor& wt = params_->value(w);
    check(x->val.rank() == 3 && wt.rank() == 4, "conv2d: rank mismatch");
    const int cin = x->val.dim(0);
    const int h = x->val.dim(1);
    const int wd = x->val.dim(2);
    const int cout = wt.dim(0);
    check(wt.dim(1) == cin && wt.dim(2) == 3 && wt.dim(3) == 3, "conv2d: kernel shape");
    const int oh = (h + 1) / 2;
    const int ow = (wd + 1) / 2;

    Tensor y({cout, oh, ow});
    const double* bp = b >= 0 ? params_->value(b).v.data() : nullptr;
    for (int co = 0; co < cout; ++co) {
        const double bias = bp ? bp[co] : 0.0;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = bias;
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = 2 * oy + ky - 1;
                        if (iy < 0 || iy >= h) {
                            continue;
                        }
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = 2 * ox + kx - 1;
                            if (ix < 0 || ix >= wd) {
                                continue;
                            }
                            acc += wt.v[((static_cast<size_t>(co) * cin + ci) * 3 + ky) * 3 + kx] *
                                   x->val.at(ci, iy, ix);
                        }
                    }
                }
                y.at(co, oy, ox) = acc;
            }
        }
    }

    Var o = make(std::move(y), x->needs_grad || param_grads());
    if (o->needs_grad) {
        Tape* tp = this;
        o->back = [o, x, w, b, cin, h, wd, cout, oh, ow, tp] {
            const Tensor& wt2 = tp->params_->value(w);
            const bool gx = x->needs_grad;
            if (gx) {
                ensure_grad(x);
            }
            double* gw = tp->param_grads() ? tp->sink_grad(w) : nullptr;
            double* gb = (tp->param_grads() && b >= 0) ? tp->sink_grad(b) : nullptr;
            for (int co = 0; co < cout; ++co) {
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox) {
                        const double g = o->grad.at(co, oy, ox);
                        if (g == 0.0) {
                            continue;
                        }
                        if (gb) {
                            gb[co] += g;
                        }
                        for (int ci = 0; ci < cin; ++ci) {
                            for (int ky = 0; ky < 3; ++ky) {
                                const int iy = 2 * oy + ky - 1;
                                if (iy < 0 || iy >= h) {
                                    continue;
                                }
                                for (int kx = 0; kx < 3; ++kx) {
                                    const int ix = 2 * ox + kx - 1;
                                    if (ix < 0 || ix >= wd) {
                                        continue;
                                    }
                                    const size_t wi =
                                        ((static_cast<size_t>(co) * cin + ci) * 3 + ky) * 3 + kx;
                                    if (gw) {
                                        gw[wi] += g * x->val.at(ci, iy, ix);
                                    }
                                    if (gx) {
                                        x->grad.at(ci, iy, ix) += g * wt2.v[wi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        };
    }
    return o;
}

Var Tape::embedding_mean(const std::vector<int>& token_ids, ParamId table) {
    const Tensor& tab = params_->value(table);
    check(tab.rank() == 2, "embedding_mean: table rank");
    check(!token_ids.empty(), "embedding_mean: empty token list");
    const int d = tab.cols();
    const double inv_n = 1.0 / static_cast<double>(token_ids.size());

    Tensor y({1, d});
    for (int id : token_ids) {
        check(id >= 0 && id < tab.rows(), "embedding_mean: token id out of range");
        for (int j = 0; j < d; ++j) {
            y.v[static_cast<size_t>(j)] += tab.at(id, j) * inv_n;
        }
    }

    Var o = make(std::move(y), param_grads());
    if (o->needs_grad) {
        Tape* tp = this;
        std::vector<int> ids = token_ids;
        o->back = [o, ids, table, d, inv_n, tp] {
            double* gt = tp->sink_grad(table);
            for (int id : ids) {
                for (int j = 0; j < d; ++j) {
                    gt[static_cast<size_t>(id) * d + j] += o->grad.v[static_cast<size_t>(j)] * inv_n;
                }
            }
        };
    }
    return o;
}

Var Tape::layer_norm(Var x, ParamId gamma, ParamId beta, double eps) {
    check(x->val.rank() == 2, "layer_norm: rank");
    const int n = x->val.rows();
    const int d = x->val.cols();
    check(d > 1, "layer_norm: needs width > 1");

    Tensor y({n, d});
    Tensor xhat({n, d});
    std::vector<double> inv_sigma(static_cast<size_t>(n));
    const double* gm = gamma >= 0 ? params_->value(gamma).v.data() : nullptr;
    const double* bt = beta >= 0 ? params_->value(beta).v.data() : nullptr;
    for (int i = 0; i < n; ++i) {
        double mu = 0.0;
        for (int j = 0; j < d; ++j) {
            mu += x->val.at(i, j);
        }
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = x->val.at(i, j) - mu;
            var += c * c;
        }
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_sigma[static_cast<size_t>(i)] = is;
        for (int j = 0; j < d; ++j) {
            const double xh = (x->val.at(i, j) - mu) * is;
            xhat.at(i, j) = xh;
            y.at(i, j) = (gm ? gm[j] : 1.0) * xh + (bt ? bt[j] : 0.0);
        }
    }

    Var o = make(std::move(y), x->needs_grad || (param_grads() && (gamma >= 0 || beta >= 0)));
    if (o->needs_grad) {
        Tape* tp = this;
        auto xh = std::make_shared<Tensor>(std::move(xhat));
        auto isg = std::make_shared<std::vector<double>>(std::move(inv_sigma));
        o->back = [o, x, gamma, beta, n, d, xh, isg, tp] {
            const double* gm2 = gamma >= 0 ? tp->params_->value(gamma).v.data() : nullptr;
            double* ggamma = (tp->param_grads() && gamma >= 0) ? tp->sink_grad(gamma) : nullptr;
            double* gbeta = (tp->param_grads() && beta >= 0) ? tp->sink_grad(beta) : nullptr;
            if (x->needs_grad) {
                ensure_grad(x);
            }
            for (int i = 0; i < n; ++i) {
                double mean_dxhat = 0.0;
                double mean_dxhat_xhat = 0.0;
                for (int j = 0; j < d; ++j) {
                    const double go = o->grad.at(i, j);
                    const double dxhat = go * (gm2 ? gm2[j] : 1.0);
                    mean_dxhat += dxhat;
                    mean_dxhat_xhat += dxhat * xh->at(i, j);
                    if (ggamma) {
                        ggamma[j] += go * xh->at(i, j);
                    }
                    if (gbeta) {
                        gbeta[j] += go;
                    }
                }
                mean_dxhat /= d;
                mean_dxhat_xhat /= d;
                if (x->needs_grad) {
                    const double is = (*isg)[static_cast<size_t>(i)];
                    for (int j = 0; j < d; ++j) {
                        const double dxhat = o->grad.at(i, j) * (gm2 ? gm2[j] : 1.0);
                        x->grad.at(i, j) +=
                            is * (dxhat - mean_dxhat - xh->at(i, j) * mean_dxhat_xhat);
                    }
                }
            }
        };
    }
    return o;
}

Var Tape::add(Var a, Var b) {
    check(a->val.same_shape(b->val), "add: shape mismatch");
    Tensor y(a->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        y.v[static_cast<size_t>(i)] = a->val.v[static_cast<size_t>(i)] + b->val.v[static_cast<size_t>(i)];
    }
    Var o = make(std::move(y), a->needs_grad || b->needs_grad);
    if (o->needs_grad) {
        o->back = [o, a, b] {
            if (a->needs_grad) {
                ensure_grad(a);
                for (int64_t i = 0; i < o->grad.size(); ++i) {
                    a->grad.v[static_cast<size_t>(i)] += o->grad.v[static_cast<size_t>(i)];
                }
            }
            if (b->needs_grad) {
                ensure_grad(b);
                for (int64_t i = 0; i < o->grad.size(); ++i) {
                    b->grad.v[static_cast<size_t>(i)] += o->grad.v[static_cast<size_t>(i)];
                }
            }
        };
    }
    return o;
}

Var Tape::sub(Var a, Var b) {
    check(a->val.same_shape(b->val), "sub: shape mismatch");
    Tensor y(a->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        y.v[static_cast<size_t>(i)] = a->val.v[static_cast<size_t>(i)] - b->val.v[static_cast<size_t>(i)];
    }
    Var o = make(std::move(y), a->needs_grad || b->needs_grad);
    if (o->needs_grad) {
        o->back = [o, a, b] {
            if (a->needs_grad) {
                ensure_grad(a);
                for (int64_t i = 0; i < o->grad.size(); ++i) {
                    a->grad.v[static_cast<size_t>(i)] += o->grad.v[static_cast<size_t>(i)];
                }
            }
            if (b->needs_grad) {
                ensure_grad(b);
                for (int64_t i = 0; i < o->grad.size(); ++i) {
                    b->grad.v[static_cast<size_t>(i)] -= o->grad.v[static_cast<size_t>(i)];
                }
            }
        };
    }
    return o;
}

Var Tape::mul(Var a, Var b) {
    check(a->val.same_shape(b->val), "mul: shape mismatch");
    Tensor y(a->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        y.v[static_cast<size_t>(i)] = a->val.v[static_cast<size_t>(i)] * b->val.v[static_cast<size_t>(i)];
    }
    Var o = make(std::move(y), a->needs_grad || b->needs_grad);
    if (o->needs_grad) {
        o->back = [o, a, b] {
            if (a->needs_grad) {
                ensure_grad(a);
                for (int64_t i = 0; i < o->grad.size(); ++i) {
                    a->grad.v[static_cast<size_t>(i)] +=
                        o->grad.v[static_cast<size_t>(i)] * b->val.v[static_cast<size_t>(i)];
                }
            }
            if (b->needs_grad) {
                ensure_grad(b);
                for (int64_t i = 0; i < o->grad.size(); ++i) {
                    b->grad.v[static_cast<size_t>(i)] +=
                        o->grad.v[static_cast<size_t>(i)] * a->val.v[static_cast<size_t>(i)];
                }
            }
        };
    }
    return o;
}

Var Tape::scale(Var a, double c) {
    Tensor y(a->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        y.v[static_cast<size_t>(i)] = a->val.v[static_cast<size_t>(i)] * c;
    }
    Var o = make(std::move(y), a->needs_grad);
    if (o->needs_grad) {
        o->back = [o, a, c] {
            ensure_grad(a);
            for (int64_t i = 0; i < o->grad.size(); ++i) {
                a->grad.v[static_cast<size_t>(i)] += o->grad.v[static_cast<size_t>(i)] * c;
            }
        };
    }
    return o;
}

Var Tape::add_rowvec(Var x, Var r) {
    check(x->val.rank() == 2 && r->val.rank() == 2 && r->val.rows() == 1 &&
              r->val.cols() == x->val.cols(),
          "add_rowvec: shape");
    const int n = x->val.rows();
    const int d = x->val.cols();
    Tensor y({n, d});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            y.at(i, j) = x->val.at(i, j) + r->val.v[static_cast<size_t>(j)];
        }
    }
    Var o = make(std::move(y), x->needs_grad || r->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x, r, n, d] {
            if (x->needs_grad) {
                ensure_grad(x);
                for (int64_t i = 0; i < o->grad.size(); ++i) {
                    x->grad.v[static_cast<size_t>(i)] += o->grad.v[static_cast<size_t>(i)];
                }
            }
            if (r->needs_grad) {
                ensure_grad(r);
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < d; ++j) {
                        r->grad.v[static_cast<size_t>(j)] += o->grad.at(i, j);
                    }
                }
            }
        };
    }
    return o;
}

Var Tape::sub_rowvec(Var x, Var r) {
    Var neg = scale(r, -1.0);
    return add_rowvec(x, neg);
}

Var Tape::div_rowvec(Var x, Var r) {
    check(x->val.rank() == 2 && r->val.rows() == 1 && r->val.cols() == x->val.cols(),
          "div_rowvec: shape");
    const int n = x->val.rows();
    const int d = x->val.cols();
    Tensor y({n, d});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            y.at(i, j) = x->val.at(i, j) / r->val.v[static_cast<size_t>(j)];
        }
    }
    Var o = make(std::move(y), x->needs_grad || r->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x, r, n, d] {
            if (x->needs_grad) {
                ensure_grad(x);
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < d; ++j) {
                        x->grad.at(i, j) += o->grad.at(i, j) / r->val.v[static_cast<size_t>(j)];
                    }
                }
            }
            if (r->needs_grad) {
                ensure_grad(r);
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < d; ++j) {
                        const double rv = r->val.v[static_cast<size_t>(j)];
                        r->grad.v[static_cast<size_t>(j)] -=
                            o->grad.at(i, j) * x->val.at(i, j) / (rv * rv);
                    }
                }
            }
        };
    }
    return o;
}

Var Tape::sqrt_ev(Var x) {
    Tensor y(x->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        y.v[static_cast<size_t>(i)] = std::sqrt(x->val.v[static_cast<size_t>(i)]);
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x] {
            ensure_grad(x);
            for (int64_t i = 0; i < o->grad.size(); ++i) {
                x->grad.v[static_cast<size_t>(i)] +=
                    o->grad.v[static_cast<size_t>(i)] * 0.5 / o->val.v[static_cast<size_t>(i)];
            }
        };
    }
    return o;
}

Var Tape::relu(Var x) {
    Tensor y(x->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        const double v = x->val.v[static_cast<size_t>(i)];
        y.v[static_cast<size_t>(i)] = v > 0.0 ? v : 0.0;
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x] {
            ensure_grad(x);
            for (int64_t i = 0; i < o->grad.size(); ++i) {
                if (x->val.v[static_cast<size_t>(i)] > 0.0) {
                    x->grad.v[static_cast<size_t>(i)] += o->grad.v[static_cast<size_t>(i)];
                }
            }
        };
    }
    return o;
}

Var Tape::gelu(Var x) {
    Tensor y(x->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        const double v = x->val.v[static_cast<size_t>(i)];
        y.v[static_cast<size_t>(i)] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x] {
            ensure_grad(x);
            for (int64_t i = 0; i < o->grad.size(); ++i) {
                const double v = x->val.v[static_cast<size_t>(i)];
                const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
                const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
                x->grad.v[static_cast<size_t>(i)] +=
                    o->grad.v[static_cast<size_t>(i)] * (cdf + v * pdf);
            }
        };
    }
    return o;
}

Var Tape::tanh_ev(Var x) {
    Tensor y(x->val.shape);
    for (int64_t i = 0; i < y.size(); ++i) {
        y.v[static_cast<size_t>(i)] = std::tanh(x->val.v[static_cast<size_t>(i)]);
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x] {
            ensure_grad(x);
            for (int64_t i = 0; i < o->grad.size(); ++i) {
                const double t = o->val.v[static_cast<size_t>(i)];
                x->grad.v[static_cast<size_t>(i)] += o->grad.v[static_cast<size_t>(i)] * (1.0 - t * t);
            }
        };
    }
    return o;
}

Var Tape::matmul(Var a, Var b) {
    check(a->val.rank() == 2 && b->val.rank() == 2 && a->val.cols() == b->val.rows(),
          "matmul: shape");
    const int n = a->val.rows();
    const int k = a->val.cols();
    const int m = b->val.cols();
    Tensor y({n, m});
    gemm_acc(a->val.v.data(), b->val.v.data(), y.v.data(), n, k, m);
    Var o = make(std::move(y), a->needs_grad || b->needs_grad);
    if (o->needs_grad) {
        o->back = [o, a, b, n, k, m] {
            if (a->needs_grad) {
                ensure_grad(a);
                gemm_nt_acc(o->grad.v.data(), b->val.v.data(), a->grad.v.data(), n, m, k);
            }
            if (b->needs_grad) {
                ensure_grad(b);
                gemm_tn_acc(a->val.v.data(), o->grad.v.data(), b->grad.v.data(), n, k, m);
            }
        };
    }
    return o;
}

Var Tape::matmul_nt(Var a, Var b) {
    check(a->val.rank() == 2 && b->val.rank() == 2 && a->val.cols() == b->val.cols(),
          "matmul_nt: shape");
    const int n = a->val.rows();
    const int k = a->val.cols();
    const int m = b->val.rows();
    Tensor y({n, m});
    gemm_nt_acc(a->val.v.data(), b->val.v.data(), y.v.data(), n, k, m);
    Var o = make(std::move(y), a->needs_grad || b->needs_grad);
    if (o->needs_grad) {
        o->back = [o, a, b, n, k, m] {
            // y = a b^T; da = g b; db = g^T a
            if (a->needs_grad) {
                ensure_grad(a);
                gemm_acc(o->grad.v.data(), b->val.v.data(), a->grad.v.data(), n, m, k);
            }
            if (b->needs_grad) {
                ensure_grad(b);
                gemm_tn_acc(o->grad.v.data(), a->val.v.data(), b->grad.v.data(), n, m, k);
            }
        };
    }
    return o;
}

Var Tape::matmul_tn(Var a, Var b) {
    check(a->val.rank() == 2 && b->val.rank() == 2 && a->val.rows() == b->val.rows(),
          "matmul_tn: shape");
    const int n = a->val.rows();
    const int k = a->val.cols();
    const int m = b->val.cols();
    Tensor y({k, m});
    gemm_tn_acc(a->val.v.data(), b->val.v.data(), y.v.data(), n, k, m);
    Var o = make(std::move(y), a->needs_grad || b->needs_grad);
    if (o->needs_grad) {
        o->back = [o, a, b, n, k, m] {
            // y = a^T b; da = b g^T ([N,M]x[M,K]) ; db = a g
            if (a->needs_grad) {
                ensure_grad(a);
                gemm_nt_acc(b->val.v.data(), o->grad.v.data(), a->grad.v.data(), n, m, k);
            }
            if (b->needs_grad) {
                ensure_grad(b);
                gemm_acc(a->val.v.data(), o->grad.v.data(), b->grad.v.data(), n, k, m);
            }
        };
    }
    return o;
}

Var Tape::softmax_rows(Var x) {
    check(x->val.rank() == 2, "softmax_rows: rank");
    const int n = x->val.rows();
    const int d = x->val.cols();
    Tensor y({n, d});
    for (int i = 0; i < n; ++i) {
        double mx = x->val.at(i, 0);
        for (int j = 1; j < d; ++j) {
            mx = std::max(mx, x->val.at(i, j));
        }
        double sum = 0.0;
        for (int j = 0; j < d; ++j) {
            const double e = std::exp(x->val.at(i, j) - mx);
            y.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < d; ++j) {
            y.at(i, j) /= sum;
        }
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x, n, d] {
            ensure_grad(x);
            for (int i = 0; i < n; ++i) {
                double dot = 0.0;
                for (int j = 0; j < d; ++j) {
                    dot += o->grad.at(i, j) * o->val.at(i, j);
                }
                for (int j = 0; j < d; ++j) {
                    x->grad.at(i, j) += o->val.at(i, j) * (o->grad.at(i, j) - dot);
                }
            }
        };
    }
    return o;
}

Var Tape::slice_cols(Var x, int c0, int c1) {
    check(x->val.rank() == 2 && 0 <= c0 && c0 < c1 && c1 <= x->val.cols(), "slice_cols: range");
    const int n = x->val.rows();
    const int d = c1 - c0;
    Tensor y({n, d});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            y.at(i, j) = x->val.at(i, c0 + j);
        }
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x, c0, n, d] {
            ensure_grad(x);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < d; ++j) {
                    x->grad.at(i, c0 + j) += o->grad.at(i, j);
                }
            }
        };
    }
    return o;
}

Var Tape::row(Var x, int i) {
    check(x->val.rank() == 2 && i >= 0 && i < x->val.rows(), "row: index");
    const int d = x->val.cols();
    Tensor y({1, d});
    for (int j = 0; j < d; ++j) {
        y.v[static_cast<size_t>(j)] = x->val.at(i, j);
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x, i, d] {
            ensure_grad(x);
            for (int j = 0; j < d; ++j) {
                x->grad.at(i, j) += o->grad.v[static_cast<size_t>(j)];
            }
        };
    }
    return o;
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
    check(!rows.empty(), "stack_rows: empty");
    const int d = rows[0]->val.cols();
    const int n = static_cast<int>(rows.size());
    bool ng = false;
    Tensor y({n, d});
    for (int i = 0; i < n; ++i) {
        check(rows[static_cast<size_t>(i)]->val.rows() == 1 &&
                  rows[static_cast<size_t>(i)]->val.cols() == d,
              "stack_rows: shape");
        ng = ng || rows[static_cast<size_t>(i)]->needs_grad;
        for (int j = 0; j < d; ++j) {
            y.at(i, j) = rows[static_cast<size_t>(i)]->val.v[static_cast<size_t>(j)];
        }
    }
    Var o = make(std::move(y), ng);
    if (o->needs_grad) {
        std::vector<Var> rs = rows;
        o->back = [o, rs, n, d] {
            for (int i = 0; i < n; ++i) {
                Var r = rs[static_cast<size_t>(i)];
                if (!r->needs_grad) {
                    continue;
                }
                ensure_grad(r);
                for (int j = 0; j < d; ++j) {
                    r->grad.v[static_cast<size_t>(j)] += o->grad.at(i, j);
                }
            }
        };
    }
    return o;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    check(!parts.empty(), "concat_cols: empty");
    const int n = parts[0]->val.rows();
    int total = 0;
    bool ng = false;
    for (Var p : parts) {
        check(p->val.rank() == 2 && p->val.rows() == n, "concat_cols: shape");
        total += p->val.cols();
        ng = ng || p->needs_grad;
    }
    Tensor y({n, total});
    int off = 0;
    for (Var p : parts) {
        const int d = p->val.cols();
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                y.at(i, off + j) = p->val.at(i, j);
            }
        }
        off += d;
    }
    Var o = make(std::move(y), ng);
    if (o->needs_grad) {
        std::vector<Var> ps = parts;
        o->back = [o, ps, n] {
            int off2 = 0;
            for (Var p : ps) {
                const int d = p->val.cols();
                if (p->needs_grad) {
                    ensure_grad(p);
                    for (int i = 0; i < n; ++i) {
                        for (int j = 0; j < d; ++j) {
                            p->grad.at(i, j) += o->grad.at(i, off2 + j);
                        }
                    }
                }
                off2 += d;
            }
        };
    }
    return o;
}

Var Tape::global_avg_pool(Var x) {
    check(x->val.rank() == 3, "global_avg_pool: rank");
    const int c = x->val.dim(0);
    const int hw = x->val.dim(1) * x->val.dim(2);
    const double inv = 1.0 / static_cast<double>(hw);
    Tensor y({1, c});
    for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        const double* base = x->val.v.data() + static_cast<size_t>(ch) * hw;
        for (int i = 0; i < hw; ++i) {
            acc += base[i];
        }
        y.v[static_cast<size_t>(ch)] = acc * inv;
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x, c, hw, inv] {
            ensure_grad(x);
            for (int ch = 0; ch < c; ++ch) {
                const double g = o->grad.v[static_cast<size_t>(ch)] * inv;
                double* base = x->grad.v.data() + static_cast<size_t>(ch) * hw;
                for (int i = 0; i < hw; ++i) {
                    base[i] += g;
                }
            }
        };
    }
    return o;
}

Var Tape::col_mean(Var x) {
    check(x->val.rank() == 2, "col_mean: rank");
    const int n = x->val.rows();
    const int d = x->val.cols();
    const double inv = 1.0 / static_cast<double>(n);
    Tensor y({1, d});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            y.v[static_cast<size_t>(j)] += x->val.at(i, j) * inv;
        }
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x, n, d, inv] {
            ensure_grad(x);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < d; ++j) {
                    x->grad.at(i, j) += o->grad.v[static_cast<size_t>(j)] * inv;
                }
            }
        };
    }
    return o;
}

Var Tape::sum_all(Var x) {
    Tensor y({1, 1});
    for (double v : x->val.v) {
        y.v[0] += v;
    }
    Var o = make(std::move(y), x->needs_grad);
    if (o->needs_grad) {
        o->back = [o, x] {
            ensure_grad(x);
            const double g = o->grad.v[0];
            for (auto& gv : x->grad.v) {
                gv += g;
            }
        };
    }
    return o;
}

Var Tape::mean_all(Var x) {
    Var s = sum_all(x);
    return scale(s, 1.0 / static_cast<double>(x->val.size()));
}

Var Tape::mse(Var a, Var b) {
    Var d = sub(a, b);
    Var sq = mul(d, d);
    return mean_all(sq);
}

void Tape::backward(Var loss) {
    check(loss->val.size() == 1, "backward: loss must be scalar");
    ensure_grad(loss);
    loss->grad.v[0] = 1.0;
    backward_seeded(loss);
}

void Tape::backward_seeded(Var node) {
    (void)node;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node* n = it->get();
        if (n->needs_grad && !n->grad.empty() && n->back) {
            n->back();
        }
    }
}

}  // namespace n2n::nn
