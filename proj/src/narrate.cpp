#include "n2n/sim/narrate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "n2n/errors.hpp"
#include "n2n/sim/scenario.hpp"

namespace n2n::sim {

namespace {

// clang-format off
const std::array<std::string, kVocabSize> kVocab = {
    "scene", "intent", "path", "reason", "no", "none", "pedestrian", "pedestrians",
    "near", "mid", "far", "left", "center", "right", "crossing", "approaching",
    "leading", "standing", "turning", "will", "cross", "oncoming", "walks", "ahead",
    "waits", "turns", "continue", "straight", "veer", "stop", "yield", "slow",
    "keep", "distance", "clear", "walls", "wall", "corridor", "goal", "robot",
    "one", "two", "three", "four", "five", "many", "group", "people",
    "behind", "beside", "toward", "away", "moving", "stationary", "stopped", "fast",
    "slowly", "passes", "enters", "exits", "blocked", "free", "space", "gap",
    "wide", "tight", "close", "distant", "approach", "follow", "lead", "stand",
    "turn", "wait", "walk", "run", "merge", "avoid", "detour", "bend",
    "curve", "edge", "side", "front", "rear", "onward", "halt", "proceed",
    "resume", "track", "watch", "observe", "predict", "expect", "plan", "route",
    "around", "through", "between", "open", "narrow", "junction", "crosswalk", "doorway",
    "after", "before", "soon", "now", "then", "next", "first", "second",
    "third", "last", "up", "down", "at", "in", "of", "and",
    "the", "a", "to", "is", "are", "with", "by", "for",
};
// clang-format on

const std::map<std::string, int>& vocab_index() {
    static const std::map<std::string, int> idx = [] {
        std::map<std::string, int> m;
        for (int i = 0; i < kVocabSize; ++i) {
            m[kVocab[static_cast<size_t>(i)]] = i;
        }
        return m;
    }();
    return idx;
}

struct VisiblePed {
    int index;
    double dist;
    double bearing;
    Behavior behavior;
};

std::vector<VisiblePed> visible_pedestrians(const WorldState& w, const SimConfig& cfg) {
    const double half_fov = cfg.fov_deg * M_PI / 360.0;
    std::vector<VisiblePed> out;
    for (size_t i = 0; i < w.pedestrians.size(); ++i) {
        const Vec2 rel = world_to_body(w.robot_pose, w.pedestrians[i].position);
        const double d = rel.norm();
        const double b = std::atan2(rel.y, rel.x);
        if (d <= cfg.view_range && std::fabs(b) <= half_fov) {
            out.push_back({static_cast<int>(i), d, b, w.pedestrians[i].behavior});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const VisiblePed& a, const VisiblePed& b) { return a.dist < b.dist; });
    if (out.size() > 4) {
        out.resize(4);
    }
    return out;
}

bool walls_visible(const WorldState& w, const SimConfig& cfg) {
    const double half_fov = cfg.fov_deg * M_PI / 360.0;
    for (const auto& wall : w.obstacles) {
        for (int s = 0; s <= 8; ++s) {
            const double t = s / 8.0;
            const Vec2 p = wall.a + (wall.b - wall.a) * t;
            const Vec2 rel = world_to_body(w.robot_pose, p);
            const double d = rel.norm();
            if (d <= cfg.view_range && std::fabs(std::atan2(rel.y, rel.x)) <= half_fov) {
                return true;
            }
        }
    }
    return false;
}

int tid(const char* word) { return token_id(word); }

}  // namespace

const std::array<std::string, kVocabSize>& vocabulary() { return kVocab; }

int token_id(const std::string& word) {
    const auto& idx = vocab_index();
    auto it = idx.find(word);
    if (it == idx.end()) {
        throw ContractError("token not in vocabulary: " + word);
    }
    return it->second;
}

const std::string& token_word(int id) {
    if (id < 0 || id >= kVocabSize) {
        throw ContractError("token id out of range: " + std::to_string(id));
    }
    return kVocab[static_cast<size_t>(id)];
}

std::vector<int> Narration::all_tokens() const {
    std::vector<int> out;
    out.reserve(scene_context.size() + human_intentions.size() + trajectory_summary.size() +
                reasoning.size());
    out.insert(out.end(), scene_context.begin(), scene_context.end());
    out.insert(out.end(), human_intentions.begin(), human_intentions.end());
    out.insert(out.end(), trajectory_summary.begin(), trajectory_summary.end());
    out.insert(out.end(), reasoning.begin(), reasoning.end());
    return out;
}

std::string Narration::to_text() const {
    std::string s;
    for (int id : all_tokens()) {
        if (!s.empty()) {
            s += ' ';
        }
        s += token_word(id);
    }
    return s;
}

const char* distance_bucket(double meters) {
    if (meters < 2.0) {
        return "near";
    }
    if (meters < 5.0) {
        return "mid";
    }
    return "far";
}

const char* bearing_bucket(double radians) {
    constexpr double kCenterHalfWidth = 10.0 * M_PI / 180.0;
    if (std::fabs(radians) <= kCenterHalfWidth) {
        return "center";
    }
    return radians > 0.0 ? "left" : "right";
}

const char* trajectory_summary_word(const Trajectory& future) {
    if (future.empty()) {
        return "stop";
    }
    const Vec2 net = future.back();
    if (net.norm() < 0.1) {
        return "stop";
    }
    const double theta = std::atan2(net.y, net.x);
    double mean_y = 0.0;
    for (const auto& wp : future) {
        mean_y += wp.y;
    }
    mean_y /= static_cast<double>(future.size());
    constexpr double kVeerAngle = 15.0 * M_PI / 180.0;
    if (std::fabs(theta) >= kVeerAngle) {
        return theta > 0.0 ? "left" : "right";
    }
    if (std::fabs(mean_y) >= 0.3) {
        return mean_y > 0.0 ? "left" : "right";
    }
    return "straight";
}

Narration narrate(const WorldState& w, const Trajectory& future, const SimConfig& cfg) {
    if (static_cast<int>(future.size()) != cfg.horizon) {
        throw ContractError("narrate: future must have exactly horizon entries");
    }

    Narration n;
    const auto peds = visible_pedestrians(w, cfg);

    n.scene_context.push_back(tid("scene"));
    if (peds.empty()) {
        n.scene_context.push_back(tid("no"));
        n.scene_context.push_back(tid("pedestrians"));
    } else {
        for (const auto& p : peds) {
            n.scene_context.push_back(tid("pedestrian"));
            n.scene_context.push_back(tid(distance_bucket(p.dist)));
            n.scene_context.push_back(tid(bearing_bucket(p.bearing)));
            n.scene_context.push_back(tid(to_string(p.behavior)));
        }
    }
    if (walls_visible(w, cfg)) {
        n.scene_context.push_back(tid("walls"));
    }

    n.human_intentions.push_back(tid("intent"));
    if (peds.empty()) {
        n.human_intentions.push_back(tid("none"));
    } else {
        for (const auto& p : peds) {
            switch (p.behavior) {
                case Behavior::Crossing:
                    n.human_intentions.push_back(tid("will"));
                    n.human_intentions.push_back(tid("cross"));
                    break;
                case Behavior::Approaching:
                    n.human_intentions.push_back(tid("oncoming"));
                    break;
                case Behavior::Leading:
                    n.human_intentions.push_back(tid("walks"));
                    n.human_intentions.push_back(tid("ahead"));
                    break;
                case Behavior::Standing:
                    n.human_intentions.push_back(tid("waits"));
                    break;
                case Behavior::Turning:
                    n.human_intentions.push_back(tid("turns"));
                    break;
            }
        }
    }

    n.trajectory_summary.push_back(tid("path"));
    const std::string word = trajectory_summary_word(future);
    if (word == "straight") {
        n.trajectory_summary.push_back(tid("continue"));
        n.trajectory_summary.push_back(tid("straight"));
    } else if (word == "stop") {
        n.trajectory_summary.push_back(tid("stop"));
    } else {
        n.trajectory_summary.push_back(tid("veer"));
        n.trajectory_summary.push_back(tid(word.c_str()));
    }

    n.reasoning.push_back(tid("reason"));
    bool urgent = false;
    for (const auto& p : peds) {
        if (p.dist < 2.0 &&
            (p.behavior == Behavior::Crossing || p.behavior == Behavior::Approaching)) {
            urgent = true;
            break;
        }
    }
    if (urgent) {
        n.reasoning.push_back(tid("yield"));
        n.reasoning.push_back(tid("slow"));
    } else if (!peds.empty()) {
        n.reasoning.push_back(tid("keep"));
        n.reasoning.push_back(tid("distance"));
    } else {
        n.reasoning.push_back(tid("clear"));
        n.reasoning.push_back(tid("continue"));
    }

    return n;
}

}  // namespace n2n::sim
