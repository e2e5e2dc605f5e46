#include "n2n/train.hpp"

#include <cmath>
#include <limits>
#include <thread>

#include "n2n/adamw.hpp"
#include "n2n/errors.hpp"
#include "n2n/losses.hpp"
#include "n2n/rng.hpp"

namespace n2n::train {

using models::StudentModel;
using models::TeacherModel;
using nn::GradBuffer;
using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

// Runs fn(bucket, index) over [0, count); bucket = index % kGradBuckets.
// Buckets are processed in ascending index order by whichever thread owns
// them, so the arithmetic never depends on the OS thread count.
void for_each_bucketed(int count, int threads, const std::function<void(int, int)>& fn) {
    const int workers = std::max(1, std::min(threads, kGradBuckets));
    if (workers == 1) {
        for (int b = 0; b < kGradBuckets; ++b) {
            for (int i = b; i < count; i += kGradBuckets) {
                fn(b, i);
            }
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int b = w; b < kGradBuckets; b += workers) {
                    for (int i = b; i < count; i += kGradBuckets) {
                        fn(b, i);
                    }
                }
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

// Fixed-order reduction: bucket-partial losses summed ascending.
double reduce_losses(const std::array<double, kGradBuckets>& partial) {
    double total = 0.0;
    for (double p : partial) {
        total += p;
    }
    return total;
}

Tensor flat_labels(const Trajectory& traj) {
    Tensor t({1, 2 * static_cast<int>(traj.size())});
    for (size_t k = 0; k < traj.size(); ++k) {
        t.v[2 * k] = traj[k].x;
        t.v[2 * k + 1] = traj[k].y;
    }
    return t;
}

std::vector<Image> frame_window(const sim::Episode& ep, int first, int count) {
    std::vector<Image> out;
    out.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        out.push_back(ep.frames[static_cast<size_t>(first + k)]);
    }
    return out;
}

struct Batches {
    std::vector<SampleRef> order;
    int batch_size;

    int batch_count() const {
        return static_cast<int>((order.size() + static_cast<size_t>(batch_size) - 1) /
                                static_cast<size_t>(batch_size));
    }
    std::vector<SampleRef> batch(int b) const {
        const size_t lo = static_cast<size_t>(b) * static_cast<size_t>(batch_size);
        const size_t hi = std::min(order.size(), lo + static_cast<size_t>(batch_size));
        return std::vector<SampleRef>(order.begin() + static_cast<long>(lo),
                                      order.begin() + static_cast<long>(hi));
    }
};

}  // namespace

std::vector<SampleRef> teacher_samples(const std::vector<sim::Episode>& eps, int horizon) {
    std::vector<SampleRef> out;
    for (size_t e = 0; e < eps.size(); ++e) {
        const int steps = eps[e].steps();
        for (int t = 0; t + horizon <= steps; ++t) {
            out.push_back({static_cast<int>(e), t});
        }
    }
    return out;
}

std::vector<SampleRef> stage2_samples(const std::vector<sim::Episode>& eps, int horizon) {
    std::vector<SampleRef> out;
    for (size_t e = 0; e < eps.size(); ++e) {
        const int steps = eps[e].steps();
        // Student needs t-horizon+1..t; the teacher window anchors at t+1.
        for (int t = horizon - 1; t + 1 + horizon <= steps; ++t) {
            out.push_back({static_cast<int>(e), t});
        }
    }
    return out;
}

std::vector<SampleRef> finetune_samples(const std::vector<sim::Episode>& eps, int horizon) {
    std::vector<SampleRef> out;
    for (size_t e = 0; e < eps.size(); ++e) {
        const int steps = eps[e].steps();
        for (int t = horizon - 1; t < steps; ++t) {
            out.push_back({static_cast<int>(e), t});
        }
    }
    return out;
}

Waypoint goal_at_step(const sim::Episode& ep, int t) {
    const Vec2 goal_world = body_to_world(ep.poses[0], ep.goal);
    return world_to_body(ep.poses[static_cast<size_t>(t)], goal_world);
}

std::vector<EpochLog> train_teacher(TeacherModel& model, const std::vector<sim::Episode>& train_eps,
                                    const std::vector<sim::Episode>& val_eps,
                                    const TrainSettings& s) {
    const int horizon = model.dims().horizon;
    std::vector<SampleRef> samples = teacher_samples(train_eps, horizon);
    if (samples.empty()) {
        throw ConfigError("train_teacher: empty train split");
    }
    const std::vector<SampleRef> val_samples = teacher_samples(val_eps, horizon);

    nn::AdamW opt(model.params(), {s.learning_rate, 0.9, 0.999, 1e-8, s.weight_decay});
    std::vector<GradBuffer> sinks;
    for (int b = 0; b < kGradBuckets; ++b) {
        sinks.emplace_back(model.params());
    }
    GradBuffer total(model.params());

    auto sample_loss = [&](const SampleRef& ref, GradBuffer* sink, double scale) {
        const sim::Episode& ep = train_eps[static_cast<size_t>(ref.episode)];
        Tape tape(model.params(), sink);
        auto fwd = model.forward(tape, frame_window(ep, ref.t, horizon),
                                 ep.labels[static_cast<size_t>(ref.t)],
                                 ep.narrations[static_cast<size_t>(ref.t)]);
        Var target = tape.constant(flat_labels(ep.labels[static_cast<size_t>(ref.t)]));
        Var loss = tape.mse(fwd.traj_flat, target);
        if (sink != nullptr) {
            Var scaled = tape.scale(loss, scale);
            tape.backward(scaled);
        }
        return loss->val.v[0];
    };

    std::vector<EpochLog> log;
    Rng shuffle_rng(Rng::mix(s.seed, 0xA11));
    for (int epoch = 0; epoch < s.epochs; ++epoch) {
        Batches batches{samples, s.batch_size};
        shuffle_rng.shuffle(batches.order);

        double train_acc = 0.0;
        int64_t train_n = 0;
        for (int b = 0; b < batches.batch_count(); ++b) {
            const std::vector<SampleRef> batch = batches.batch(b);
            const double scale = 1.0 / static_cast<double>(batch.size());
            std::array<double, kGradBuckets> partial{};
            for (auto& sink : sinks) {
                sink.zero();
            }
            for_each_bucketed(static_cast<int>(batch.size()), s.threads,
                              [&](int bucket, int i) {
                                  partial[static_cast<size_t>(bucket)] += sample_loss(
                                      batch[static_cast<size_t>(i)],
                                      &sinks[static_cast<size_t>(bucket)], scale);
                              });
            total.zero();
            for (const auto& sink : sinks) {
                total.add(sink);
            }
            opt.step(total);
            train_acc += reduce_losses(partial);
            train_n += static_cast<int64_t>(batch.size());
        }

        double val = std::numeric_limits<double>::quiet_NaN();
        if (!val_samples.empty()) {
            std::array<double, kGradBuckets> partial{};
            for_each_bucketed(static_cast<int>(val_samples.size()), s.threads,
                              [&](int bucket, int i) {
                                  const SampleRef& ref = val_samples[static_cast<size_t>(i)];
                                  const sim::Episode& ep =
                                      val_eps[static_cast<size_t>(ref.episode)];
                                  Tape tape(model.params(), nullptr);
                                  auto fwd = model.forward(
                                      tape, frame_window(ep, ref.t, horizon),
                                      ep.labels[static_cast<size_t>(ref.t)],
                                      ep.narrations[static_cast<size_t>(ref.t)]);
                                  Var target = tape.constant(
                                      flat_labels(ep.labels[static_cast<size_t>(ref.t)]));
                                  partial[static_cast<size_t>(bucket)] +=
                                      tape.mse(fwd.traj_flat, target)->val.v[0];
                              });
            val = reduce_losses(partial) / static_cast<double>(val_samples.size());
        }
        log.push_back({epoch, train_acc / static_cast<double>(train_n), val});
    }
    return log;
}

std::vector<EpochLog> pretrain_student(StudentModel& student, const TeacherModel& teacher,
                                       const std::vector<sim::Episode>& train_eps,
                                       const PretrainSettings& s) {
    if (s.batch_size < 4) {
        throw ConfigError("pretrain: batch_size must be >= 4 (batch statistics)");
    }
    if (s.mask_prob < 0.0 || s.mask_prob > 1.0) {
        throw ConfigError("pretrain: mask_prob must be in [0, 1]");
    }
    const int horizon = student.dims().horizon;
    std::vector<SampleRef> samples = stage2_samples(train_eps, horizon);
    if (samples.empty()) {
        throw ConfigError("pretrain_student: empty train split");
    }

    nn::AdamW opt(student.params(), {s.learning_rate, 0.9, 0.999, 1e-8, s.weight_decay});
    std::vector<GradBuffer> sinks;
    for (int b = 0; b < kGradBuckets; ++b) {
        sinks.emplace_back(student.params());
    }
    GradBuffer master(student.params());
    GradBuffer total(student.params());

    const int D = student.dims().embed_dim;
    const sim::Narration empty_narration;

    std::vector<EpochLog> log;
    Rng shuffle_rng(Rng::mix(s.seed, 0xB22));
    Rng mask_rng(Rng::mix(s.seed, 0xC33));
    for (int epoch = 0; epoch < s.epochs; ++epoch) {
        Batches batches{samples, s.batch_size};
        shuffle_rng.shuffle(batches.order);

        double loss_acc = 0.0;
        int64_t batch_count = 0;
        for (int b = 0; b < batches.batch_count(); ++b) {
            const std::vector<SampleRef> batch = batches.batch(b);
            const int n = static_cast<int>(batch.size());
            if (n < 4) {
                continue;  // a trailing sliver has no usable batch statistics
            }
            std::vector<bool> masked(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                masked[static_cast<size_t>(i)] = mask_rng.bernoulli(s.mask_prob);
            }

            // Phase 1: per-sample forwards. Teacher runs gradient-free; the
            // student tapes stay alive for the seeded backward pass.
            std::vector<std::unique_ptr<Tape>> student_tapes(static_cast<size_t>(n));
            std::vector<Var> student_ctx(static_cast<size_t>(n));
            Tensor teacher_ctx({n, D});
            Tensor student_ctx_vals({n, D});
            for (auto& sink : sinks) {
                sink.zero();
            }
            for_each_bucketed(n, s.threads, [&](int bucket, int i) {
                const SampleRef& ref = batch[static_cast<size_t>(i)];
                const sim::Episode& ep = train_eps[static_cast<size_t>(ref.episode)];
                const int t = ref.t;
                const int ts = t + 1;  // teacher window anchor

                {
                    Tape ttape(teacher.params(), nullptr);
                    auto tf = teacher.forward(ttape, frame_window(ep, ts, horizon),
                                              ep.labels[static_cast<size_t>(ts)],
                                              s.no_text
                                                  ? empty_narration
                                                  : ep.narrations[static_cast<size_t>(ts)]);
                    for (int d = 0; d < D; ++d) {
                        teacher_ctx.at(i, d) = tf.ctx->val.v[static_cast<size_t>(d)];
                    }
                }

                auto& stape = student_tapes[static_cast<size_t>(i)];
                stape = std::make_unique<Tape>(student.params(),
                                               &sinks[static_cast<size_t>(bucket)]);
                std::optional<Waypoint> goal;
                if (!masked[static_cast<size_t>(i)]) {
                    goal = goal_at_step(ep, t);
                }
                auto sf = student.forward(*stape, frame_window(ep, t - horizon + 1, horizon),
                                          goal);
                student_ctx[static_cast<size_t>(i)] = sf.ctx;
                for (int d = 0; d < D; ++d) {
                    student_ctx_vals.at(i, d) = sf.ctx->val.v[static_cast<size_t>(d)];
                }
            });

            // Phase 2: coupled BT loss over the batch on a master tape.
            master.zero();
            Tape mtape(student.params(), &master);
            Var xs = mtape.input(student_ctx_vals, true);
            Var xt = mtape.constant(teacher_ctx);
            Var ps = student.project_student(mtape, xs);
            Var pt = student.project_teacher(mtape, xt);
            Var loss = nn::barlow_twins_loss_g(mtape, ps, pt, s.lambda);
            mtape.backward(loss);

            // Phase 3: seed per-sample ctx grads and finish the backward.
            for_each_bucketed(n, s.threads, [&](int bucket, int i) {
                (void)bucket;
                Var ctx = student_ctx[static_cast<size_t>(i)];
                ctx->grad = Tensor(ctx->val.shape);
                for (int d = 0; d < D; ++d) {
                    ctx->grad.v[static_cast<size_t>(d)] = xs->grad.at(i, d);
                }
                student_tapes[static_cast<size_t>(i)]->backward_seeded(ctx);
            });

            total.zero();
            total.add(master);
            for (const auto& sink : sinks) {
                total.add(sink);
            }
            opt.step(total);
            loss_acc += loss->val.v[0];
            ++batch_count;
        }
        if (batch_count == 0) {
            throw ConfigError("pretrain_student: no batch of size >= 4; add data or shrink batch");
        }
        log.push_back({epoch, loss_acc / static_cast<double>(batch_count),
                       std::numeric_limits<double>::quiet_NaN()});
    }
    return log;
}

std::vector<EpochLog> finetune_student(StudentModel& student,
                                       const std::vector<sim::Episode>& train_eps,
                                       const std::vector<sim::Episode>& val_eps,
                                       const FinetuneSettings& s) {
    const int horizon = student.dims().horizon;
    std::vector<SampleRef> samples = finetune_samples(train_eps, horizon);
    if (samples.empty()) {
        throw ConfigError("finetune_student: empty train split");
    }
    const std::vector<SampleRef> val_samples = finetune_samples(val_eps, horizon);

    nn::AdamW opt(student.params(), {s.learning_rate, 0.9, 0.999, 1e-8, s.weight_decay});
    std::vector<GradBuffer> sinks;
    for (int b = 0; b < kGradBuckets; ++b) {
        sinks.emplace_back(student.params());
    }
    GradBuffer total(student.params());

    auto sample_loss = [&](const std::vector<sim::Episode>& eps, const SampleRef& ref,
                           GradBuffer* sink, double scale, bool mask_goal) {
        const sim::Episode& ep = eps[static_cast<size_t>(ref.episode)];
        Tape tape(student.params(), sink);
        std::optional<Waypoint> goal;
        if (!mask_goal) {
            goal = goal_at_step(ep, ref.t);
        }
        auto fwd = student.forward(tape, frame_window(ep, ref.t - horizon + 1, horizon), goal);
        Var target = tape.constant(flat_labels(ep.labels[static_cast<size_t>(ref.t)]));
        Var loss = tape.mse(fwd.traj_flat, target);
        if (sink != nullptr) {
            tape.backward(tape.scale(loss, scale));
        }
        return loss->val.v[0];
    };

    std::vector<EpochLog> log;
    Rng shuffle_rng(Rng::mix(s.seed, 0xD44));
    Rng mask_rng(Rng::mix(s.seed, 0xE55));
    for (int epoch = 0; epoch < s.epochs; ++epoch) {
        Batches batches{samples, s.batch_size};
        shuffle_rng.shuffle(batches.order);

        double train_acc = 0.0;
        int64_t train_n = 0;
        for (int b = 0; b < batches.batch_count(); ++b) {
            const std::vector<SampleRef> batch = batches.batch(b);
            const double scale = 1.0 / static_cast<double>(batch.size());
            std::vector<bool> masked(batch.size());
            for (size_t i = 0; i < batch.size(); ++i) {
                masked[i] = mask_rng.bernoulli(s.mask_prob);
            }
            std::array<double, kGradBuckets> partial{};
            for (auto& sink : sinks) {
                sink.zero();
            }
            for_each_bucketed(static_cast<int>(batch.size()), s.threads,
                              [&](int bucket, int i) {
                                  partial[static_cast<size_t>(bucket)] += sample_loss(
                                      train_eps, batch[static_cast<size_t>(i)],
                                      &sinks[static_cast<size_t>(bucket)], scale,
                                      masked[static_cast<size_t>(i)]);
                              });
            total.zero();
            for (const auto& sink : sinks) {
                total.add(sink);
            }
            opt.step(total);
            train_acc += reduce_losses(partial);
            train_n += static_cast<int64_t>(batch.size());
        }

        double val = std::numeric_limits<double>::quiet_NaN();
        if (!val_samples.empty()) {
            std::array<double, kGradBuckets> partial{};
            for_each_bucketed(static_cast<int>(val_samples.size()), s.threads,
                              [&](int bucket, int i) {
                                  partial[static_cast<size_t>(bucket)] += sample_loss(
                                      val_eps, val_samples[static_cast<size_t>(i)], nullptr,
                                      1.0, false);
                              });
            val = reduce_losses(partial) / static_cast<double>(val_samples.size());
        }
        log.push_back({epoch, train_acc / static_cast<double>(train_n), val});
    }
    return log;
}

double eval_student_mse(const StudentModel& student, const std::vector<sim::Episode>& eps,
                        int threads) {
    const int horizon = student.dims().horizon;
    const std::vector<SampleRef> samples = finetune_samples(eps, horizon);
    if (samples.empty()) {
        throw ConfigError("eval_student_mse: empty split");
    }
    std::array<double, kGradBuckets> partial{};
    for_each_bucketed(static_cast<int>(samples.size()), threads, [&](int bucket, int i) {
        const SampleRef& ref = samples[static_cast<size_t>(i)];
        const sim::Episode& ep = eps[static_cast<size_t>(ref.episode)];
        Tape tape(student.params(), nullptr);
        auto fwd = student.forward(tape, frame_window(ep, ref.t - horizon + 1, horizon),
                                   goal_at_step(ep, ref.t));
        Var target = tape.constant(flat_labels(ep.labels[static_cast<size_t>(ref.t)]));
        partial[static_cast<size_t>(bucket)] += tape.mse(fwd.traj_flat, target)->val.v[0];
    });
    return reduce_losses(partial) / static_cast<double>(samples.size());
}

}  // namespace n2n::train
