#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace n2n::nn {

// Dense row-major tensor of doubles, rank <= 4.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(count(shape), 0.0) {}
    Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {}

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            n *= d;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int> s, double value) {
        Tensor t(std::move(s));
        for (auto& x : t.v) {
            x = value;
        }
        return t;
    }

    int64_t size() const { return static_cast<int64_t>(v.size()); }
    bool empty() const { return v.empty(); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    // 2-D accessors (rows x cols).
    int rows() const { return shape[0]; }
    int cols() const { return shape[1]; }
    double& at(int i, int j) { return v[static_cast<size_t>(i) * shape[1] + j]; }
    double at(int i, int j) const { return v[static_cast<size_t>(i) * shape[1] + j]; }

    // 3-D accessors (c x h x w).
    double& at(int c, int i, int j) {
        return v[(static_cast<size_t>(c) * shape[1] + i) * shape[2] + j];
    }
    double at(int c, int i, int j) const {
        return v[(static_cast<size_t>(c) * shape[1] + i) * shape[2] + j];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            s += std::to_string(shape[i]);
            if (i + 1 < shape.size()) {
                s += "x";
            }
        }
        return s + "]";
    }
};

}  // namespace n2n::nn
