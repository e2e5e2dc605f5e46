#include "n2n/sim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "n2n/errors.hpp"
#include "n2n/hash.hpp"
#include "n2n/rng.hpp"

namespace n2n::sim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + p.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + p.string());
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw IoError("short write to " + p.string());
    }
}

json narration_to_json(const Narration& n) {
    auto words = [](const std::vector<int>& ids) {
        json arr = json::array();
        for (int id : ids) {
            arr.push_back(token_word(id));
        }
        return arr;
    };
    return json{{"scene_context", words(n.scene_context)},
                {"human_intentions", words(n.human_intentions)},
                {"trajectory_summary", words(n.trajectory_summary)},
                {"reasoning", words(n.reasoning)}};
}

Narration narration_from_json(const json& j) {
    auto ids = [](const json& arr) {
        std::vector<int> out;
        for (const auto& w : arr) {
            out.push_back(token_id(w.get<std::string>()));
        }
        return out;
    };
    Narration n;
    n.scene_context = ids(j.at("scene_context"));
    n.human_intentions = ids(j.at("human_intentions"));
    n.trajectory_summary = ids(j.at("trajectory_summary"));
    n.reasoning = ids(j.at("reasoning"));
    return n;
}

}  // namespace

void DatasetConfig::validate() const {
    if (episode_count < 1) {
        throw ConfigError("dataset.episode_count must be >= 1");
    }
    if (out_dir.empty()) {
        throw ConfigError("dataset.out_dir is required");
    }
    if (!mix.empty()) {
        double total = 0.0;
        for (const auto& [name, frac] : mix) {
            scenario_from_string(name);  // validates the key
            if (frac < 0.0) {
                throw ConfigError("dataset.mix fractions must be non-negative");
            }
            total += frac;
        }
        if (std::fabs(total - 1.0) > 1e-9) {
            throw ConfigError("dataset.mix fractions must sum to 1");
        }
    }
    if (train_frac < 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0) {
        throw ConfigError("dataset split fractions invalid");
    }
    sim.validate();
}

bool DatasetManifest::has_split(const std::string& split) const {
    for (const auto& e : episodes) {
        if (e.split == split) {
            return true;
        }
    }
    return false;
}

std::vector<const EpisodeEntry*> DatasetManifest::split_entries(const std::string& split) const {
    std::vector<const EpisodeEntry*> out;
    for (const auto& e : episodes) {
        if (e.split == split) {
            out.push_back(&e);
        }
    }
    return out;
}

void write_episode(const Episode& ep, const std::string& dir, const SimConfig& sim,
                   const std::string& config_hash) {
    fs::create_directories(dir);
    const fs::path root(dir);

    json manifest{{"scenario", to_string(ep.scenario)},
                  {"seed", ep.seed},
                  {"step_count", ep.steps()},
                  {"goal", {ep.goal.x, ep.goal.y}},
                  {"config_hash", config_hash},
                  {"frame_layout",
                   {{"height", sim.image_h},
                    {"width", sim.image_w},
                    {"channels", 3},
                    {"dtype", "uint8"},
                    {"order", "hwc"}}}};
    write_file(root / "manifest.json", manifest.dump(2) + "\n");

    std::string frames;
    frames.reserve(static_cast<size_t>(ep.steps()) * sim.image_h * sim.image_w * 3);
    for (const auto& img : ep.frames) {
        const auto bytes = img.to_u8();
        frames.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
    write_file(root / "frames.bin", frames);

    json labels = json::array();
    for (const auto& traj : ep.labels) {
        json t = json::array();
        for (const auto& wp : traj) {
            t.push_back({wp.x, wp.y});
        }
        labels.push_back(t);
    }
    write_file(root / "labels.json", labels.dump() + "\n");

    json narrations = json::array();
    for (const auto& n : ep.narrations) {
        narrations.push_back(narration_to_json(n));
    }
    write_file(root / "narrations.json", narrations.dump() + "\n");

    json poses{{"poses", json::array()}, {"commands", json::array()}, {"times", json::array()}};
    for (const auto& p : ep.poses) {
        poses["poses"].push_back({p.x, p.y, p.heading});
    }
    for (const auto& c : ep.commands) {
        poses["commands"].push_back({c.v, c.omega});
    }
    for (const auto& f : ep.frames) {
        poses["times"].push_back(f.frame_time);
    }
    write_file(root / "poses.json", poses.dump() + "\n");
}

Episode read_episode(const std::string& dir) {
    const fs::path root(dir);
    const json manifest = json::parse(read_file(root / "manifest.json"));
    const json layout = manifest.at("frame_layout");
    const int h = layout.at("height").get<int>();
    const int w = layout.at("width").get<int>();
    const int c = layout.at("channels").get<int>();
    if (layout.at("dtype").get<std::string>() != "uint8" ||
        layout.at("order").get<std::string>() != "hwc") {
        throw IoError("unsupported frame layout in " + dir);
    }
    const int steps = manifest.at("step_count").get<int>();

    Episode ep;
    ep.scenario = scenario_from_string(manifest.at("scenario").get<std::string>());
    ep.seed = manifest.at("seed").get<uint64_t>();
    ep.goal = {manifest.at("goal")[0].get<double>(), manifest.at("goal")[1].get<double>()};

    const std::string raw = read_file(root / "frames.bin");
    const size_t frame_bytes = static_cast<size_t>(h) * w * c;
    if (raw.size() != frame_bytes * static_cast<size_t>(steps)) {
        throw IoError("frames.bin size mismatch in " + dir);
    }

    const json poses = json::parse(read_file(root / "poses.json"));
    const json times = poses.at("times");
    for (int k = 0; k < steps; ++k) {
        std::vector<uint8_t> bytes(frame_bytes);
        std::memcpy(bytes.data(), raw.data() + frame_bytes * static_cast<size_t>(k), frame_bytes);
        ep.frames.push_back(Image::from_u8(bytes, h, w, c, times[static_cast<size_t>(k)].get<double>()));
    }
    for (const auto& p : poses.at("poses")) {
        ep.poses.push_back(Pose{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    for (const auto& cmd : poses.at("commands")) {
        ep.commands.push_back(Command{cmd[0].get<double>(), cmd[1].get<double>()});
    }

    const json labels = json::parse(read_file(root / "labels.json"));
    for (const auto& t : labels) {
        Trajectory traj;
        for (const auto& wp : t) {
            traj.push_back({wp[0].get<double>(), wp[1].get<double>()});
        }
        ep.labels.push_back(traj);
    }

    const json narrations = json::parse(read_file(root / "narrations.json"));
    for (const auto& n : narrations) {
        ep.narrations.push_back(narration_from_json(n));
    }
    return ep;
}

namespace {

std::vector<ScenarioKind> apportion_kinds(const DatasetConfig& cfg) {
    // Largest-remainder apportionment over scenario fractions.
    std::map<std::string, double> mix = cfg.mix;
    if (mix.empty()) {
        for (ScenarioKind k : all_scenarios()) {
            mix[to_string(k)] = 0.2;
        }
    }
    struct Slot {
        ScenarioKind kind;
        int count;
        double remainder;
    };
    std::vector<Slot> slots;
    int assigned = 0;
    for (const auto& [name, frac] : mix) {
        const double exact = frac * cfg.episode_count;
        const int base = static_cast<int>(std::floor(exact + 1e-12));
        slots.push_back({scenario_from_string(name), base, exact - base});
        assigned += base;
    }
    std::stable_sort(slots.begin(), slots.end(),
                     [](const Slot& a, const Slot& b) { return a.remainder > b.remainder; });
    for (size_t i = 0; assigned < cfg.episode_count; ++i, ++assigned) {
        slots[i % slots.size()].count += 1;
    }
    std::vector<ScenarioKind> kinds;
    kinds.reserve(static_cast<size_t>(cfg.episode_count));
    std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    for (const auto& s : slots) {
        for (int i = 0; i < s.count; ++i) {
            kinds.push_back(s.kind);
        }
    }
    Rng rng(Rng::mix(cfg.seed, 7));
    rng.shuffle(kinds);
    return kinds;
}

std::string episode_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ep_%05d", index);
    return buf;
}

}  // namespace

DatasetManifest make_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    const std::vector<ScenarioKind> kinds = apportion_kinds(cfg);
    const int n = cfg.episode_count;
    const int n_train = static_cast<int>(std::lround(cfg.train_frac * n));
    const int n_val = static_cast<int>(std::lround(cfg.val_frac * n));

    fs::create_directories(cfg.out_dir);

    DatasetManifest m;
    m.config_hash = cfg.config_hash;
    m.image_h = cfg.sim.image_h;
    m.image_w = cfg.sim.image_w;
    m.dt = cfg.sim.dt;
    m.horizon = cfg.sim.horizon;
    m.root_dir = cfg.out_dir;
    for (int i = 0; i < n; ++i) {
        EpisodeEntry e;
        e.dir = episode_dir_name(i);
        e.scenario = to_string(kinds[static_cast<size_t>(i)]);
        e.seed = cfg.seed + static_cast<uint64_t>(i);
        e.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
        e.steps = cfg.sim.steps;
        m.episodes.push_back(e);
    }

    // Generation is pure per episode; worker threads each take a strided
    // subset and write independent directories.
    const int workers = std::max(1, std::min(cfg.threads, n));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    for (int wkr = 0; wkr < workers; ++wkr) {
        pool.emplace_back([&, wkr] {
            try {
                for (int i = wkr; i < n; i += workers) {
                    const auto& e = m.episodes[static_cast<size_t>(i)];
                    const Episode ep =
                        generate_episode(scenario_from_string(e.scenario), e.seed, cfg.sim);
                    write_episode(ep, (fs::path(cfg.out_dir) / e.dir).string(), cfg.sim,
                                  cfg.config_hash);
                }
            } catch (...) {
                errors[static_cast<size_t>(wkr)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }

    json top{{"format_version", m.format_version},
             {"config_hash", m.config_hash},
             {"image", {{"height", m.image_h}, {"width", m.image_w}, {"channels", m.image_c}}},
             {"dt", m.dt},
             {"horizon", m.horizon},
             {"episodes", json::array()}};
    for (const auto& e : m.episodes) {
        top["episodes"].push_back({{"dir", e.dir},
                                   {"scenario", e.scenario},
                                   {"seed", e.seed},
                                   {"split", e.split},
                                   {"steps", e.steps}});
    }
    const std::string bytes = top.dump(2) + "\n";
    write_file(fs::path(cfg.out_dir) / "manifest.json", bytes);
    m.dataset_hash = hash_hex(fnv1a64(bytes));
    return m;
}

DatasetManifest load_manifest(const std::string& root_dir) {
    const std::string bytes = read_file(fs::path(root_dir) / "manifest.json");
    const json top = json::parse(bytes);
    DatasetManifest m;
    m.format_version = top.at("format_version").get<int>();
    m.config_hash = top.at("config_hash").get<std::string>();
    m.image_h = top.at("image").at("height").get<int>();
    m.image_w = top.at("image").at("width").get<int>();
    m.image_c = top.at("image").at("channels").get<int>();
    m.dt = top.at("dt").get<double>();
    m.horizon = top.at("horizon").get<int>();
    for (const auto& e : top.at("episodes")) {
        m.episodes.push_back(EpisodeEntry{e.at("dir").get<std::string>(),
                                          e.at("scenario").get<std::string>(),
                                          e.at("seed").get<uint64_t>(),
                                          e.at("split").get<std::string>(),
                                          e.at("steps").get<int>()});
    }
    m.root_dir = root_dir;
    m.dataset_hash = hash_hex(fnv1a64(bytes));
    return m;
}

std::vector<Episode> load_split(const DatasetManifest& m, const std::string& split) {
    std::vector<Episode> out;
    for (const auto& e : m.episodes) {
        if (e.split == split) {
            out.push_back(read_episode((fs::path(m.root_dir) / e.dir).string()));
        }
    }
    return out;
}

}  // namespace n2n::sim
