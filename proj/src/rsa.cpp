#include "lorehm/rsa.hpp"

#include "lorehm/error.hpp"

namespace lorehm {

PreliminaryPrediction vote(const RetrievedSet& retrieved) {
    const std::size_t k = retrieved.neighbors.size();
    if (k % 2 == 0) {
        throw Error("vote: neighbor count must be odd, got " + std::to_string(k));
    }
    std::size_t harmful = 0;
    for (const auto& n : retrieved.neighbors) {
        if (!n.label) {
            throw Error("vote: neighbor \"" + n.id + "\" has no label");
        }
        if (*n.label == HarmLabel::harmful) {
            ++harmful;
        }
    }
    // 2 * harmful > k is the integer form of harmful > k / 2.
    const auto value = 2 * harmful > k ? HarmLabel::harmful : HarmLabel::harmless;
    return {retrieved.target_id, value, harmful, k};
}

} // namespace lorehm
