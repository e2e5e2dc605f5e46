#include <doctest.h>

#include <cmath>

#include "n2n/adamw.hpp"
#include "n2n/autodiff.hpp"
#include "n2n/rng.hpp"

using namespace n2n;
using namespace n2n::nn;

namespace {

// Central finite difference on a scalar-valued rebuildable function of one
// input tensor entry.
double fd_input(const std::function<double(const Tensor&)>& f, Tensor x, size_t idx,
                double h = 1e-5) {
    Tensor hi = x;
    Tensor lo = x;
    hi.v[idx] += h;
    lo.v[idx] -= h;
    return (f(hi) - f(lo)) / (2.0 * h);
}

double rel_err(double a, double b) {
    const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / denom;
}

Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.v) {
        v = rng.normal(0.0, scale);
    }
    return t;
}

}  // namespace

TEST_CASE("matmul forward and backward match finite differences") {
    Rng rng(7);
    ParamStore store;
    Tensor a = random_tensor(rng, {3, 4});
    Tensor b = random_tensor(rng, {4, 5});

    auto loss_fn = [&](const Tensor& av, const Tensor& bv) {
        Tape t(store, nullptr);
        Var x = t.input(av, false);
        Var y = t.input(bv, false);
        Var z = t.matmul(x, y);
        Var s = t.mul(z, z);
        return t.sum_all(s)->val.v[0];
    };

    Tape t(store, nullptr);
    Var x = t.input(a, true);
    Var y = t.input(b, true);
    Var z = t.matmul(x, y);
    Var s = t.mul(z, z);
    Var loss = t.sum_all(s);
    t.backward(loss);

    for (size_t i = 0; i < a.v.size(); i += 3) {
        const double fd = fd_input([&](const Tensor& av) { return loss_fn(av, b); }, a, i);
        CHECK(rel_err(x->grad.v[i], fd) < 1e-6);
    }
    for (size_t i = 0; i < b.v.size(); i += 4) {
        const double fd = fd_input([&](const Tensor& bv) { return loss_fn(a, bv); }, b, i);
        CHECK(rel_err(y->grad.v[i], fd) < 1e-6);
    }
}

TEST_CASE("matmul_nt and matmul_tn agree with explicit transposes") {
    Rng rng(11);
    ParamStore store;
    Tensor a = random_tensor(rng, {3, 4});
    Tensor b = random_tensor(rng, {5, 4});

    Tape t(store, nullptr);
    Var x = t.input(a, false);
    Var y = t.input(b, false);
    Var nt = t.matmul_nt(x, y);  // [3,5]
    REQUIRE(nt->val.rows() == 3);
    REQUIRE(nt->val.cols() == 5);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) {
                acc += a.at(i, k) * b.at(j, k);
            }
            CHECK(nt->val.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    }

    Tensor c = random_tensor(rng, {3, 6});
    Var z = t.input(c, false);
    Var tn = t.matmul_tn(x, z);  // [4,6]
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 6; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) {
                acc += a.at(k, i) * c.at(k, j);
            }
            CHECK(tn->val.at(i, j) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("elementwise and norm ops backward vs finite differences") {
    Rng rng(13);
    ParamStore store;
    Tensor a = random_tensor(rng, {4, 6});

    struct Case {
        const char* name;
        std::function<Var(Tape&, Var)> op;
    };
    const Case cases[] = {
        {"relu", [](Tape& t, Var x) { return t.relu(x); }},
        {"gelu", [](Tape& t, Var x) { return t.gelu(x); }},
        {"tanh", [](Tape& t, Var x) { return t.tanh_ev(x); }},
        {"softmax", [](Tape& t, Var x) { return t.softmax_rows(x); }},
        {"layer_norm", [](Tape& t, Var x) { return t.layer_norm(x, -1, -1, 1e-5); }},
        {"col_mean", [](Tape& t, Var x) { return t.col_mean(x); }},
    };

    for (const auto& c : cases) {
        CAPTURE(c.name);
        // Weighted sum makes the scalar sensitive to every output entry.
        auto weighted = [&](Tape& t, Var out) {
            Tensor w(out->val.shape);
            Rng wr(99);
            for (auto& v : w.v) {
                v = wr.normal(0.0, 1.0);
            }
            return t.sum_all(t.mul(out, t.constant(w)));
        };
        auto loss_fn = [&](const Tensor& av) {
            Tape t(store, nullptr);
            Var x = t.input(av, false);
            return weighted(t, c.op(t, x))->val.v[0];
        };

        Tape t(store, nullptr);
        Var x = t.input(a, true);
        Var loss = weighted(t, c.op(t, x));
        t.backward(loss);
        for (size_t i = 0; i < a.v.size(); i += 5) {
            const double fd = fd_input(loss_fn, a, i);
            CHECK(rel_err(x->grad.v[i], fd) < 1e-5);
        }
    }
}

TEST_CASE("conv2d_s2 and pooling backward vs finite differences") {
    Rng rng(17);
    ParamStore store;
    const ParamId w = store.add("w", random_tensor(rng, {4, 3, 3, 3}, 0.3));
    const ParamId b = store.add("b", random_tensor(rng, {4}, 0.1));
    Tensor img = random_tensor(rng, {3, 8, 8});

    auto loss_value = [&](const Tensor& input) {
        Tape t(store, nullptr);
        Var x = t.input(input, false);
        Var y = t.conv2d_s2(x, w, b);
        Var p = t.global_avg_pool(y);
        Var sq = t.mul(p, p);
        return t.sum_all(sq)->val.v[0];
    };

    GradBuffer sink(store);
    Tape t(store, &sink);
    Var x = t.input(img, true);
    Var y = t.conv2d_s2(x, w, b);
    REQUIRE(y->val.dim(0) == 4);
    REQUIRE(y->val.dim(1) == 4);
    REQUIRE(y->val.dim(2) == 4);
    Var p = t.global_avg_pool(y);
    Var sq = t.mul(p, p);
    Var loss = t.sum_all(sq);
    t.backward(loss);

    for (size_t i = 0; i < img.v.size(); i += 17) {
        const double fd = fd_input(loss_value, img, i);
        CHECK(rel_err(x->grad.v[i], fd) < 1e-5);
    }

    // Parameter gradients through the sink.
    Tensor& wv = store.value(w);
    for (size_t i = 0; i < wv.v.size(); i += 13) {
        const double h = 1e-5;
        const double orig = wv.v[i];
        wv.v[i] = orig + h;
        const double hi = loss_value(img);
        wv.v[i] = orig - h;
        const double lo = loss_value(img);
        wv.v[i] = orig;
        CHECK(rel_err(sink.grad(w)[i], (hi - lo) / (2.0 * h)) < 1e-5);
    }
}

TEST_CASE("linear accumulates parameter gradients into the sink") {
    Rng rng(23);
    ParamStore store;
    const ParamId w = store.add("w", random_tensor(rng, {4, 3}, 0.5));
    const ParamId b = store.add("b", random_tensor(rng, {3}, 0.5));
    Tensor x = random_tensor(rng, {2, 4});

    auto loss_value = [&] {
        Tape t(store, nullptr);
        Var in = t.input(x, false);
        Var out = t.linear(in, w, b);
        Var sq = t.mul(out, out);
        return t.sum_all(sq)->val.v[0];
    };

    GradBuffer sink(store);
    {
        Tape t(store, &sink);
        Var in = t.input(x, false);
        Var out = t.linear(in, w, b);
        Var sq = t.mul(out, out);
        t.backward(t.sum_all(sq));
    }

    for (ParamId id : {w, b}) {
        Tensor& pv = store.value(id);
        for (size_t i = 0; i < pv.v.size(); ++i) {
            const double h = 1e-6;
            const double orig = pv.v[i];
            pv.v[i] = orig + h;
            const double hi = loss_value();
            pv.v[i] = orig - h;
            const double lo = loss_value();
            pv.v[i] = orig;
            CHECK(rel_err(sink.grad(id)[i], (hi - lo) / (2.0 * h)) < 1e-5);
        }
    }
}

TEST_CASE("embedding_mean averages rows and routes gradients") {
    Rng rng(29);
    ParamStore store;
    const ParamId table = store.add("table", random_tensor(rng, {6, 4}, 0.5));

    GradBuffer sink(store);
    Tape t(store, &sink);
    Var out = t.embedding_mean({1, 3, 3}, table);
    const Tensor& tab = store.value(table);
    for (int j = 0; j < 4; ++j) {
        const double expect = (tab.at(1, j) + 2.0 * tab.at(3, j)) / 3.0;
        CHECK(out->val.v[static_cast<size_t>(j)] == doctest::Approx(expect).epsilon(1e-12));
    }
    t.backward(t.sum_all(out));
    CHECK(sink.grad(table)[1 * 4 + 0] == doctest::Approx(1.0 / 3.0));
    CHECK(sink.grad(table)[3 * 4 + 0] == doctest::Approx(2.0 / 3.0));
    CHECK(sink.grad(table)[0] == 0.0);
}

TEST_CASE("layer_norm rows have zero mean and unit variance") {
    Rng rng(31);
    ParamStore store;
    Tape t(store, nullptr);
    Var x = t.input(random_tensor(rng, {3, 64}, 2.0), false);
    Var y = t.layer_norm(x, -1, -1, 1e-12);
    for (int i = 0; i < 3; ++i) {
        double mu = 0.0, var = 0.0;
        for (int j = 0; j < 64; ++j) {
            mu += y->val.at(i, j);
        }
        mu /= 64;
        for (int j = 0; j < 64; ++j) {
            var += (y->val.at(i, j) - mu) * (y->val.at(i, j) - mu);
        }
        var /= 64;
        CHECK(std::fabs(mu) < 1e-9);
        CHECK(std::fabs(var - 1.0) < 1e-9);
    }
}

TEST_CASE("forward passes are deterministic") {
    Rng rng(37);
    ParamStore store;
    const ParamId w = store.add("w", random_tensor(rng, {8, 8}, 0.5));
    Tensor x = random_tensor(rng, {2, 8});
    auto run = [&] {
        Tape t(store, nullptr);
        Var out = t.gelu(t.linear(t.input(x, false), w, -1));
        return out->val.v;
    };
    CHECK(run() == run());
}

TEST_CASE("adamw decays weights decoupled from the gradient") {
    ParamStore store;
    const ParamId p = store.add("p", Tensor({2}, {1.0, -2.0}));
    AdamWSettings s;
    s.learning_rate = 0.1;
    s.weight_decay = 0.5;
    AdamW opt(store, s);
    GradBuffer g(store);
    g.grad(p)[0] = 0.0;
    g.grad(p)[1] = 0.0;
    opt.step(g);
    // Zero gradient: only the decay term acts, w -= lr * wd * w.
    CHECK(store.value(p).v[0] == doctest::Approx(1.0 - 0.1 * 0.5 * 1.0));
    CHECK(store.value(p).v[1] == doctest::Approx(-2.0 - 0.1 * 0.5 * -2.0));
}

TEST_CASE("frozen parameters are skipped by the optimizer") {
    ParamStore store;
    const ParamId p = store.add("p", Tensor({1}, {1.0}));
    store.set_frozen(p, true);
    AdamW opt(store, {0.1, 0.9, 0.999, 1e-8, 0.1});
    GradBuffer g(store);
    g.grad(p)[0] = 5.0;
    opt.step(g);
    CHECK(store.value(p).v[0] == 1.0);
}
