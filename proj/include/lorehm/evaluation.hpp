#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lorehm/backend.hpp"
#include "lorehm/embedding_index.hpp"
#include "lorehm/ledger.hpp"
#include "lorehm/mia.hpp"
#include "lorehm/rsa.hpp"

namespace lorehm {

struct Prediction {
    MemeId meme_id;
    HarmLabel prelim = HarmLabel::harmless;
    HarmLabel final = HarmLabel::harmless;
    std::string thought;
    bool flagged = false;
    std::size_t harmful_votes = 0;
    std::vector<MemeId> neighbor_ids;

    bool operator==(const Prediction&) const = default;
};

nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

// Final judgment: classifier prior plus insight list plus the chain-of-thought
// prompt, with the same parse retry/fallback as experience gathering.
Prediction infer(const MemeSample& meme, const RetrievedSet& retrieved,
                 const PreliminaryPrediction& prelim, const InsightSet& insights,
                 LmmBackend& backend, const RequestContext& ctx);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct EvalReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    ClassMetrics harmful;
    ClassMetrics harmless;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t flagged_count = 0;
};

nlohmann::json to_json(const EvalReport& r);

// Accuracy plus per-class precision/recall/F1 with 0/0 taken as 0, and
// macro-F1 as the unweighted mean over both classes.
EvalReport evaluate_labels(std::span<const HarmLabel> predicted, std::span<const HarmLabel> gold);

// Scores final labels; every prediction needs a gold label.
EvalReport evaluate(std::span<const Prediction> preds, const std::map<MemeId, HarmLabel>& gold);

// Same, but scoring the vote-only preliminary labels.
EvalReport evaluate_prelim(std::span<const Prediction> preds, const std::map<MemeId, HarmLabel>& gold);

} // namespace lorehm
