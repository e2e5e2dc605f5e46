#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace n2n {

// Deterministic RNG. mt19937_64 output is fully specified by the standard and
// all transformations below are our own, so identical seeds give identical
// streams on every platform/compiler. std::*_distribution is never used.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive range.
    int uniform_int(int lo, int hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    // Box-Muller, no cached spare (keeps the state just the engine).
    double normal(double mu = 0.0, double sigma = 1.0) {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 < 1e-300) {
            u1 = 1e-300;
        }
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(0, static_cast<int>(i - 1)));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derives an independent sub-stream (splitmix64 on the pair).
    static uint64_t mix(uint64_t seed, uint64_t stream) {
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    Rng fork(uint64_t stream) { return Rng(mix(gen_(), stream)); }

private:
    std::mt19937_64 gen_;
};

}  // namespace n2n
