#pragma once

#include <array>
#include <string>
#include <vector>

#include "n2n/geometry.hpp"
#include "n2n/sim/world.hpp"

namespace n2n::sim {

struct SimConfig;

constexpr int kVocabSize = 128;

// The fixed narration vocabulary. Token ids are indices into this table.
const std::array<std::string, kVocabSize>& vocabulary();

// Whitespace-free lookup; throws ContractError for words outside the table.
int token_id(const std::string& word);
const std::string& token_word(int id);

struct Narration {
    std::vector<int> scene_context;
    std::vector<int> human_intentions;
    std::vector<int> trajectory_summary;
    std::vector<int> reasoning;

    std::vector<int> all_tokens() const;
    bool empty() const {
        return scene_context.empty() && human_intentions.empty() &&
               trajectory_summary.empty() && reasoning.empty();
    }
    std::string to_text() const;
};

// Bucketing rules shared with the template generator.
const char* distance_bucket(double meters);           // near < 2, mid < 5, far
const char* bearing_bucket(double radians);           // left / center / right
const char* trajectory_summary_word(const Trajectory& future);  // straight/veer.../stop

// Deterministic template narration of the egocentric view plus a summary of
// the future trajectory (robot body frame). `future` must have cfg.horizon
// entries. Pedestrians outside the field of view or range are not narrated.
Narration narrate(const WorldState& w, const Trajectory& future, const SimConfig& cfg);

}  // namespace n2n::sim
