#pragma once

#include <cmath>
#include <vector>

#include "n2n/params.hpp"

namespace n2n::nn {

struct AdamWSettings {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Frozen tensors are skipped entirely.
class AdamW {
public:
    AdamW(ParamStore& store, AdamWSettings settings)
        : store_(&store),
          settings_(settings),
          m_(static_cast<size_t>(store.flat_size()), 0.0),
          v_(static_cast<size_t>(store.flat_size()), 0.0) {}

    void step(const GradBuffer& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(settings_.beta1, t_);
        const double bc2 = 1.0 - std::pow(settings_.beta2, t_);
        const double lr = settings_.learning_rate;
        for (ParamId id = 0; id < store_->count(); ++id) {
            if (store_->frozen(id)) {
                continue;
            }
            Tensor& p = store_->value(id);
            const double* g = grads.grad(id);
            double* m = m_.data() + store_->offset(id);
            double* v = v_.data() + store_->offset(id);
            for (int64_t i = 0; i < p.size(); ++i) {
                const double gi = g[i];
                m[i] = settings_.beta1 * m[i] + (1.0 - settings_.beta1) * gi;
                v[i] = settings_.beta2 * v[i] + (1.0 - settings_.beta2) * gi * gi;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                double& w = p.v[static_cast<size_t>(i)];
                w -= lr * (mhat / (std::sqrt(vhat) + settings_.eps) +
                           settings_.weight_decay * w);
            }
        }
    }

    int64_t steps_taken() const { return t_; }

private:
    ParamStore* store_;
    AdamWSettings settings_;
    std::vector<double> m_;
    std::vector<double> v_;
    int64_t t_ = 0;
};

}  // namespace n2n::nn
