#include "n2n/losses.hpp"

#include <cmath>

#include "n2n/errors.hpp"

namespace n2n::nn {

namespace {

constexpr double kMinStd = 1e-12;

void check_batch_pair(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ContractError("cross_correlation: batches must be 2-D");
    }
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ContractError("cross_correlation: batch shapes differ");
    }
    if (a.rows() < 2) {
        throw ContractError("cross_correlation: batch size must be >= 2");
    }
}

// Standardizes columns in place; throws on a collapsed dimension.
void standardize(Tensor& m, const char* side) {
    const int n = m.rows();
    const int k = m.cols();
    for (int j = 0; j < k; ++j) {
        double mu = 0.0;
        for (int i = 0; i < n; ++i) {
            mu += m.at(i, j);
        }
        mu /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double c = m.at(i, j) - mu;
            var += c * c;
        }
        var /= n;
        const double sd = std::sqrt(var);
        if (sd <= kMinStd) {
            throw DegenerateBatchError(std::string("cross_correlation: zero-variance dimension ") +
                                       std::to_string(j) + " in " + side + " batch");
        }
        for (int i = 0; i < n; ++i) {
            m.at(i, j) = (m.at(i, j) - mu) / sd;
        }
    }
}

}  // namespace

Tensor cross_correlation(const Tensor& a, const Tensor& b) {
    check_batch_pair(a, b);
    Tensor as = a;
    Tensor bs = b;
    standardize(as, "left");
    standardize(bs, "right");
    const int n = a.rows();
    const int k = a.cols();
    Tensor c({k, k});
    for (int i = 0; i < n; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = as.at(i, p);
            for (int q = 0; q < k; ++q) {
                c.at(p, q) += av * bs.at(i, q);
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : c.v) {
        v *= inv_n;
    }
    return c;
}

double barlow_twins_loss(const Tensor& a, const Tensor& b, double lambda) {
    if (lambda <= 0.0) {
        throw ContractError("barlow_twins_loss: lambda must be positive");
    }
    const Tensor c = cross_correlation(a, b);
    const int k = c.rows();
    double diag = 0.0;
    double off = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (i == j) {
                const double d = 1.0 - c.at(i, j);
                diag += d * d;
            } else {
                off += c.at(i, j) * c.at(i, j);
            }
        }
    }
    return diag + lambda * off;
}

namespace {

// Column standardization on the tape: (x - mean) / sqrt(var).
Var standardize_g(Tape& t, Var x) {
    const int n = x->val.rows();
    Var mu = t.col_mean(x);
    Var centered = t.sub_rowvec(x, mu);
    Var sq = t.mul(centered, centered);
    Var var = t.col_mean(sq);
    // Degeneracy check on values (the tape holds concrete numbers).
    for (int j = 0; j < var->val.cols(); ++j) {
        if (std::sqrt(var->val.v[static_cast<size_t>(j)]) <= kMinStd) {
            throw DegenerateBatchError("barlow_twins_loss: zero-variance dimension " +
                                       std::to_string(j));
        }
    }
    Var sd = t.sqrt_ev(var);
    (void)n;
    return t.div_rowvec(centered, sd);
}

}  // namespace

Var cross_correlation_g(Tape& t, Var a, Var b) {
    check_batch_pair(a->val, b->val);
    Var as = standardize_g(t, a);
    Var bs = standardize_g(t, b);
    Var c = t.matmul_tn(as, bs);
    return t.scale(c, 1.0 / static_cast<double>(a->val.rows()));
}

Var barlow_twins_loss_g(Tape& t, Var a, Var b, double lambda) {
    if (lambda <= 0.0) {
        throw ContractError("barlow_twins_loss: lambda must be positive");
    }
    Var c = cross_correlation_g(t, a, b);
    const int k = c->val.rows();
    // (C - I) weighted elementwise: diagonal weight 1, off-diagonal sqrt(lambda),
    // then a plain sum of squares reproduces the two-term loss.
    Tensor eye({k, k});
    Tensor w({k, k});
    const double sl = std::sqrt(lambda);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            eye.at(i, j) = i == j ? 1.0 : 0.0;
            w.at(i, j) = i == j ? 1.0 : sl;
        }
    }
    Var d = t.sub(c, t.constant(eye));
    Var dw = t.mul(d, t.constant(w));
    Var sq = t.mul(dw, dw);
    return t.sum_all(sq);
}

}  // namespace n2n::nn
