#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "n2n/errors.hpp"
#include "n2n/rng.hpp"
#include "n2n/tensor.hpp"

namespace n2n::nn {

using ParamId = int;

// Named parameter tensors. Registration order is deterministic (model builders
// register in a fixed order); checkpoints serialize by sorted name.
class ParamStore {
public:
    ParamId add(const std::string& name, Tensor init) {
        if (index_.count(name) != 0) {
            throw ContractError("duplicate parameter name: " + name);
        }
        const ParamId id = static_cast<ParamId>(entries_.size());
        offsets_.push_back(flat_size_);
        flat_size_ += init.size();
        entries_.push_back(Entry{name, std::move(init), false});
        index_[name] = id;
        return id;
    }

    int count() const { return static_cast<int>(entries_.size()); }
    int64_t flat_size() const { return flat_size_; }
    int64_t offset(ParamId id) const { return offsets_[static_cast<size_t>(id)]; }

    Tensor& value(ParamId id) { return entries_[static_cast<size_t>(id)].value; }
    const Tensor& value(ParamId id) const { return entries_[static_cast<size_t>(id)].value; }
    const std::string& name(ParamId id) const { return entries_[static_cast<size_t>(id)].name; }

    bool frozen(ParamId id) const { return entries_[static_cast<size_t>(id)].frozen; }
    void set_frozen(ParamId id, bool f) { entries_[static_cast<size_t>(id)].frozen = f; }
    void freeze_all() {
        for (auto& e : entries_) {
            e.frozen = true;
        }
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }
    ParamId id_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) {
            throw ContractError("unknown parameter: " + name);
        }
        return it->second;
    }

    // Names in sorted order (checkpoint canonical order).
    std::vector<std::string> sorted_names() const {
        std::vector<std::string> out;
        out.reserve(index_.size());
        for (const auto& [k, v] : index_) {
            (void)v;
            out.push_back(k);
        }
        return out;
    }

private:
    struct Entry {
        std::string name;
        Tensor value;
        bool frozen;
    };
    std::vector<Entry> entries_;
    std::vector<int64_t> offsets_;
    std::map<std::string, ParamId> index_;
    int64_t flat_size_ = 0;
};

// Per-worker gradient accumulator over one ParamStore layout.
class GradBuffer {
public:
    explicit GradBuffer(const ParamStore& store)
        : store_(&store), g_(static_cast<size_t>(store.flat_size()), 0.0) {}

    double* grad(ParamId id) { return g_.data() + store_->offset(id); }
    const double* grad(ParamId id) const { return g_.data() + store_->offset(id); }
    std::vector<double>& flat() { return g_; }
    const std::vector<double>& flat() const { return g_; }

    void zero() { std::fill(g_.begin(), g_.end(), 0.0); }

    void add(const GradBuffer& other) {
        for (size_t i = 0; i < g_.size(); ++i) {
            g_[i] += other.g_[i];
        }
    }

private:
    const ParamStore* store_;
    std::vector<double> g_;
};

// Parameter init helpers.
inline Tensor init_normal(Rng& rng, std::vector<int> shape, double std_dev) {
    Tensor t(std::move(shape));
    for (auto& x : t.v) {
        x = rng.normal(0.0, std_dev);
    }
    return t;
}

// Fan-in scaled init for linear/conv weights.
inline Tensor init_fanin(Rng& rng, std::vector<int> shape, int fan_in) {
    return init_normal(rng, std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

}  // namespace n2n::nn
