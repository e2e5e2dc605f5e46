#include "n2n/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "n2n/errors.hpp"

namespace n2n {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'N', '2', 'N', 'C', 'K', 'P', 'T', '\n'};

// Doubles in checkpoints are float32-exact by construction: values pass
// through a float cast on save and widen back on load.
float to_f32(double v) { return static_cast<float>(v); }

json meta_to_json(const CheckpointMeta& m) {
    return json{{"format_version", m.format_version},
                {"stage", m.stage},
                {"config_hash", m.config_hash},
                {"seed", m.seed},
                {"creation_step", m.creation_step},
                {"metrics", m.metrics},
                {"model", m.model},
                {"dataset_hash", m.dataset_hash},
                {"variant", m.variant}};
}

CheckpointMeta meta_from_json(const json& j) {
    CheckpointMeta m;
    m.format_version = j.at("format_version").get<int>();
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    m.creation_step = j.at("creation_step").get<int64_t>();
    m.metrics = j.at("metrics").get<std::map<std::string, double>>();
    m.model = j.at("model").get<std::map<std::string, int64_t>>();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    m.variant = j.at("variant").get<std::string>();
    return m;
}

}  // namespace

Checkpoint Checkpoint::from_store(const nn::ParamStore& store, CheckpointMeta meta) {
    Checkpoint ckpt;
    ckpt.meta = std::move(meta);
    for (const std::string& name : store.sorted_names()) {
        const nn::Tensor& src = store.value(store.id_of(name));
        nn::Tensor rounded(src.shape);
        for (size_t i = 0; i < src.v.size(); ++i) {
            rounded.v[i] = static_cast<double>(to_f32(src.v[i]));
        }
        ckpt.tensors.emplace(name, std::move(rounded));
    }
    return ckpt;
}

void Checkpoint::load_into(nn::ParamStore& store) const {
    const auto names = store.sorted_names();
    if (names.size() != tensors.size()) {
        throw ContractError("checkpoint: parameter count mismatch (" +
                            std::to_string(tensors.size()) + " stored, " +
                            std::to_string(names.size()) + " expected)");
    }
    for (const std::string& name : names) {
        auto it = tensors.find(name);
        if (it == tensors.end()) {
            throw ContractError("checkpoint: missing tensor " + name);
        }
        nn::Tensor& dst = store.value(store.id_of(name));
        if (dst.shape != it->second.shape) {
            throw ContractError("checkpoint: shape mismatch for " + name);
        }
        dst.v = it->second.v;
    }
}

void Checkpoint::save(const std::string& path) const {
    json header = meta_to_json(meta);
    json tensor_list = json::array();
    size_t total_floats = 0;
    for (const auto& [name, tensor] : tensors) {
        tensor_list.push_back({{"name", name}, {"shape", tensor.shape}});
        total_floats += tensor.v.size();
    }
    header["tensors"] = tensor_list;
    const std::string hdr = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write checkpoint " + path);
    }
    out.write(kMagic, sizeof(kMagic));
    const uint64_t hdr_len = hdr.size();
    out.write(reinterpret_cast<const char*>(&hdr_len), sizeof(hdr_len));
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));

    std::vector<float> payload;
    payload.reserve(total_floats);
    for (const auto& [name, tensor] : tensors) {
        (void)name;
        for (double v : tensor.v) {
            payload.push_back(to_f32(v));
        }
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) {
        throw IoError("short write to checkpoint " + path);
    }
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint " + path);
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not a checkpoint file: " + path);
    }
    uint64_t hdr_len = 0;
    in.read(reinterpret_cast<char*>(&hdr_len), sizeof(hdr_len));
    std::string hdr(hdr_len, '\0');
    in.read(hdr.data(), static_cast<std::streamsize>(hdr_len));
    if (!in) {
        throw IoError("truncated checkpoint header: " + path);
    }
    json header = json::parse(hdr, nullptr, false);
    if (header.is_discarded()) {
        throw IoError("corrupt checkpoint header: " + path);
    }

    Checkpoint ckpt;
    ckpt.meta = meta_from_json(header);
    for (const auto& entry : header.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        nn::Tensor t(shape);
        std::vector<float> buf(static_cast<size_t>(t.size()));
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!in) {
            throw IoError("truncated checkpoint payload: " + path);
        }
        for (size_t i = 0; i < buf.size(); ++i) {
            t.v[i] = static_cast<double>(buf[i]);
        }
        ckpt.tensors.emplace(name, std::move(t));
    }
    return ckpt;
}

int64_t Checkpoint::model_dim(const std::string& key) const {
    auto it = meta.model.find(key);
    if (it == meta.model.end()) {
        throw ContractError("checkpoint: missing model dimension " + key);
    }
    return it->second;
}

void require_stage(const Checkpoint& ckpt, const std::string& expected) {
    if (ckpt.meta.stage != expected) {
        throw ContractError("checkpoint stage mismatch: expected \"" + expected + "\", got \"" +
                            ckpt.meta.stage + "\"");
    }
}

}  // namespace n2n
