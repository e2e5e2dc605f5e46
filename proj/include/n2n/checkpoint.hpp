#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "n2n/params.hpp"
#include "n2n/tensor.hpp"

namespace n2n {

// Versioned weight container: a JSON header followed by named flat
// little-endian float32 tensors. Save -> load -> save is byte-identical.
struct CheckpointMeta {
    int format_version = 1;
    std::string stage;  // "teacher" | "pretrained" | "policy" | "scratch"
    std::string config_hash;
    uint64_t seed = 0;
    int64_t creation_step = 0;
    std::map<std::string, double> metrics;
    std::map<std::string, int64_t> model;  // dims needed to rebuild the model
    std::string dataset_hash;
    std::string variant;  // "" or "no_text"
};

struct Checkpoint {
    CheckpointMeta meta;
    std::map<std::string, nn::Tensor> tensors;  // values are float32-exact

    static Checkpoint from_store(const nn::ParamStore& store, CheckpointMeta meta);

    // Copies tensors into an existing store; the name sets and shapes must
    // match exactly (ContractError otherwise).
    void load_into(nn::ParamStore& store) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    int64_t model_dim(const std::string& key) const;
};

// Stage check used by every consumer of a checkpoint.
void require_stage(const Checkpoint& ckpt, const std::string& expected);

}  // namespace n2n
