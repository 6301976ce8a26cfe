#pragma once

#include <cstddef>

#include "lorehm/embedding_index.hpp"
#include "lorehm/types.hpp"

namespace lorehm {

inline constexpr std::size_t kDefaultNeighbors = 5;

struct PreliminaryPrediction {
    MemeId target_id;
    HarmLabel value = HarmLabel::harmless;
    std::size_t harmful_votes = 0;
    std::size_t k = 0;

    bool operator==(const PreliminaryPrediction&) const = default;
};

// Majority vote over neighbor labels; scores are ignored. Harmful iff more
// than k/2 neighbors are harmful.
PreliminaryPrediction vote(const RetrievedSet& retrieved);

} // namespace lorehm
