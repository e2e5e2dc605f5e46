#include <doctest.h>

#include <cmath>

#include "n2n/errors.hpp"
#include "n2n/losses.hpp"
#include "n2n/rng.hpp"

using namespace n2n;
using namespace n2n::nn;

namespace {

Tensor random_batch(Rng& rng, int n, int k) {
    Tensor t({n, k});
    for (auto& v : t.v) {
        v = rng.normal(0.0, 1.0);
    }
    return t;
}

}  // namespace

TEST_CASE("cross_correlation of identical standardized orthogonal batch is identity") {
    // Columns of a 4x2 batch chosen orthogonal after standardization.
    Tensor a({4, 2}, {1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0});
    const Tensor c = cross_correlation(a, a);
    CHECK(c.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.at(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cross_correlation hand case: perfectly coupled two-sample batch") {
    // N=2, K=2, a=b=[[1,1],[-1,-1]]: standardized columns are identical, so
    // every entry of C is 1.
    Tensor a({2, 2}, {1.0, 1.0, -1.0, -1.0});
    const Tensor c = cross_correlation(a, a);
    for (double v : c.v) {
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cross_correlation of b = -a gives -I for decorrelated columns") {
    Tensor a({4, 2}, {1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0});
    Tensor b = a;
    for (auto& v : b.v) {
        v = -v;
    }
    const Tensor c = cross_correlation(a, b);
    CHECK(c.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(c.at(1, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(c.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("barlow twins loss frozen hand-derived cases") {
    // C == I -> 0.
    Tensor orth({4, 2}, {1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0});
    CHECK(barlow_twins_loss(orth, orth, 5e-3) == doctest::Approx(0.0).epsilon(1e-12));

    // C = [[1,1],[1,1]], lambda 5e-3 -> 0 + 2 * 5e-3 = 0.01.
    Tensor coupled({2, 2}, {1.0, 1.0, -1.0, -1.0});
    CHECK(barlow_twins_loss(coupled, coupled, 5e-3) == doctest::Approx(0.01).epsilon(1e-9));

    // C = -I, K=2 -> 2 * (1 - (-1))^2 = 8.
    Tensor neg = orth;
    for (auto& v : neg.v) {
        v = -v;
    }
    CHECK(barlow_twins_loss(orth, neg, 5e-3) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("barlow twins rejects non-positive lambda and degenerate batches") {
    Rng rng(3);
    Tensor a = random_batch(rng, 6, 3);
    Tensor b = random_batch(rng, 6, 3);
    CHECK_THROWS_AS(barlow_twins_loss(a, b, 0.0), ContractError);

    Tensor flat = a;
    for (int i = 0; i < 6; ++i) {
        flat.at(i, 1) = 4.2;  // zero variance dimension
    }
    CHECK_THROWS_AS(cross_correlation(flat, b), DegenerateBatchError);
    CHECK_THROWS_AS(barlow_twins_loss(a, flat, 1e-3), DegenerateBatchError);
}

TEST_CASE("loss(a, a) has exactly zero diagonal term") {
    Rng rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        Tensor a = random_batch(rng, 8, 4);
        const Tensor c = cross_correlation(a, a);
        for (int i = 0; i < 4; ++i) {
            CHECK(c.at(i, i) == doctest::Approx(1.0).epsilon(1e-12));
        }
        // With lambda -> different values the loss scales linearly in the
        // off-diagonal term only.
        const double l1 = barlow_twins_loss(a, a, 1.0);
        const double l2 = barlow_twins_loss(a, a, 2.0);
        CHECK(l2 == doctest::Approx(2.0 * l1).epsilon(1e-9));
    }
}

TEST_CASE("diagonal term is symmetric under swapping the batches") {
    Rng rng(7);
    Tensor a = random_batch(rng, 8, 4);
    Tensor b = random_batch(rng, 8, 4);
    // Swapping transposes C; both loss terms are invariant under transpose.
    CHECK(barlow_twins_loss(a, b, 5e-3) ==
          doctest::Approx(barlow_twins_loss(b, a, 5e-3)).epsilon(1e-9));
}

TEST_CASE("per-dimension scaling leaves the loss unchanged") {
    Rng rng(9);
    Tensor a = random_batch(rng, 8, 4);
    Tensor b = random_batch(rng, 8, 4);
    const double before = barlow_twins_loss(a, b, 5e-3);
    Tensor scaled = a;
    for (int i = 0; i < 8; ++i) {
        scaled.at(i, 2) *= 37.5;  // standardization absorbs positive scale
    }
    CHECK(std::fabs(barlow_twins_loss(scaled, b, 5e-3) - before) < 1e-9);
}

TEST_CASE("graph loss equals plain loss and its gradients match finite differences") {
    Rng rng(11);
    ParamStore store;
    Tensor a = random_batch(rng, 8, 4);
    Tensor b = random_batch(rng, 8, 4);
    const double lambda = 5e-3;

    Tape t(store, nullptr);
    Var av = t.input(a, true);
    Var bv = t.input(b, true);
    Var loss = barlow_twins_loss_g(t, av, bv, lambda);
    CHECK(loss->val.v[0] == doctest::Approx(barlow_twins_loss(a, b, lambda)).epsilon(1e-12));
    t.backward(loss);

    auto eval = [&](const Tensor& aa, const Tensor& bb) {
        return barlow_twins_loss(aa, bb, lambda);
    };
    const double h = 1e-4;
    double worst = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        Tensor hi = a, lo = a;
        hi.v[i] += h;
        lo.v[i] -= h;
        const double fd = (eval(hi, b) - eval(lo, b)) / (2.0 * h);
        const double denom = std::max({std::fabs(fd), std::fabs(av->grad.v[i]), 1e-8});
        worst = std::max(worst, std::fabs(fd - av->grad.v[i]) / denom);
    }
    for (size_t i = 0; i < b.v.size(); ++i) {
        Tensor hi = b, lo = b;
        hi.v[i] += h;
        lo.v[i] -= h;
        const double fd = (eval(a, hi) - eval(a, lo)) / (2.0 * h);
        const double denom = std::max({std::fabs(fd), std::fabs(bv->grad.v[i]), 1e-8});
        worst = std::max(worst, std::fabs(fd - bv->grad.v[i]) / denom);
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("cross_correlation entries stay within [-1-eps, 1+eps]") {
    Rng rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        Tensor a = random_batch(rng, 16, 6);
        Tensor b = random_batch(rng, 16, 6);
        const Tensor c = cross_correlation(a, b);
        for (double v : c.v) {
            CHECK(v <= 1.0 + 1e-6);
            CHECK(v >= -1.0 - 1e-6);
        }
    }
}
