#pragma once

#include <map>
#include <string>
#include <vector>

#include "n2n/sim/scenario.hpp"

namespace n2n::sim {

struct DatasetConfig {
    std::string out_dir;
    int episode_count = 10;
    uint64_t seed = 0;
    std::map<std::string, double> mix;  // scenario name -> fraction; empty = uniform
    double train_frac = 0.7;
    double val_frac = 0.15;  // test gets the remainder
    SimConfig sim;
    int threads = 2;
    std::string config_hash;  // stamped into manifests

    void validate() const;
};

struct EpisodeEntry {
    std::string dir;
    std::string scenario;
    uint64_t seed = 0;
    std::string split;
    int steps = 0;
};

struct DatasetManifest {
    int format_version = 1;
    std::string config_hash;
    int image_h = 0;
    int image_w = 0;
    int image_c = 3;
    double dt = 0.5;
    int horizon = 5;
    std::vector<EpisodeEntry> episodes;

    // Derived, not serialized inside the manifest itself.
    std::string root_dir;
    std::string dataset_hash;

    std::vector<const EpisodeEntry*> split_entries(const std::string& split) const;
    bool has_split(const std::string& split) const;
};

// Generates episodes, writes the on-disk dataset, returns the manifest.
// Episode generation is parallel across episodes (cfg.threads) and the
// output is byte-identical regardless of thread count.
DatasetManifest make_dataset(const DatasetConfig& cfg);

// On-disk round trip for a single episode directory.
void write_episode(const Episode& ep, const std::string& dir, const SimConfig& sim,
                   const std::string& config_hash);
Episode read_episode(const std::string& dir);

DatasetManifest load_manifest(const std::string& root_dir);
std::vector<Episode> load_split(const DatasetManifest& m, const std::string& split);

}  // namespace n2n::sim
