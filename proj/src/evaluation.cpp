#include "lorehm/evaluation.hpp"

#include "lorehm/error.hpp"
#include "lorehm/prompts.hpp"

namespace lorehm {

nlohmann::json to_json(const Prediction& p) {
    return {{"meme_id", p.meme_id},
            {"prelim", to_string(p.prelim)},
            {"final", to_string(p.final)},
            {"thought", p.thought},
            {"flagged", p.flagged},
            {"harmful_votes", p.harmful_votes},
            {"neighbor_ids", p.neighbor_ids}};
}

Prediction prediction_from_json(const nlohmann::json& j) {
    auto label = [&](const char* key) {
        auto l = label_from_string(j.at(key).get<std::string>());
        if (!l) {
            throw Error(std::string("prediction: bad label in \"") + key + "\"");
        }
        return *l;
    };
    Prediction p;
    p.meme_id = j.at("meme_id").get<std::string>();
    p.prelim = label("prelim");
    p.final = label("final");
    p.thought = j.at("thought").get<std::string>();
    p.flagged = j.at("flagged").get<bool>();
    p.harmful_votes = j.at("harmful_votes").get<std::size_t>();
    p.neighbor_ids = j.at("neighbor_ids").get<std::vector<std::string>>();
    return p;
}

Prediction infer(const MemeSample& meme, const RetrievedSet& retrieved,
                 const PreliminaryPrediction& prelim, const InsightSet& insights,
                 LmmBackend& backend, const RequestContext& ctx) {
    if (prelim.target_id != meme.id || retrieved.target_id != meme.id) {
        throw Error("infer: preliminary prediction does not belong to meme \"" + meme.id + "\"");
    }
    auto request = make_request(ctx, prompts::kFinalTemplateId,
                                prompts::render_final_prompt(meme, prelim, insights), &meme);
    VerdictOutcome outcome;
    try {
        outcome = request_verdict(backend, request);
    } catch (const BackendError& e) {
        throw BackendError("infer \"" + meme.id + "\": " + e.what(), e.status());
    }
    Prediction p;
    p.meme_id = meme.id;
    p.prelim = prelim.value;
    p.final = outcome.verdict.answer;
    p.thought = std::move(outcome.verdict.thought);
    p.flagged = outcome.flagged;
    p.harmful_votes = prelim.harmful_votes;
    for (const auto& n : retrieved.neighbors) {
        p.neighbor_ids.push_back(n.id);
    }
    return p;
}

namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    ClassMetrics m;
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    const double sum = m.precision + m.recall;
    m.f1 = sum == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / sum;
    m.support = tp + fn;
    return m;
}

nlohmann::json to_json(const ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

template <typename Pick>
EvalReport evaluate_with(std::span<const Prediction> preds, const std::map<MemeId, HarmLabel>& gold,
                         Pick pick) {
    std::vector<HarmLabel> predicted;
    std::vector<HarmLabel> truth;
    std::size_t flagged = 0;
    for (const auto& p : preds) {
        auto it = gold.find(p.meme_id);
        if (it == gold.end()) {
            throw Error("evaluate: no gold label for meme \"" + p.meme_id + "\"");
        }
        predicted.push_back(pick(p));
        truth.push_back(it->second);
        flagged += p.flagged ? 1 : 0;
    }
    auto report = evaluate_labels(predicted, truth);
    report.flagged_count = flagged;
    return report;
}

} // namespace

nlohmann::json to_json(const EvalReport& r) {
    return {{"seed", r.seed},
            {"n", r.n},
            {"accuracy", r.accuracy},
            {"macro_f1", r.macro_f1},
            {"flagged_count", r.flagged_count},
            {"per_class", {{"harmful", to_json(r.harmful)}, {"harmless", to_json(r.harmless)}}}};
}

EvalReport evaluate_labels(std::span<const HarmLabel> predicted, std::span<const HarmLabel> gold) {
    if (predicted.size() != gold.size()) {
        throw Error("evaluate: prediction and gold lengths differ");
    }
    // Confusion counts with harmful as the positive class.
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool pred_h = predicted[i] == HarmLabel::harmful;
        const bool gold_h = gold[i] == HarmLabel::harmful;
        tp += pred_h && gold_h;
        fp += pred_h && !gold_h;
        fn += !pred_h && gold_h;
        tn += !pred_h && !gold_h;
    }
    EvalReport r;
    r.n = predicted.size();
    r.accuracy = r.n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(r.n);
    r.harmful = class_metrics(tp, fp, fn);
    r.harmless = class_metrics(tn, fn, fp);
    r.macro_f1 = (r.harmful.f1 + r.harmless.f1) / 2.0;
    return r;
}

EvalReport evaluate(std::span<const Prediction> preds, const std::map<MemeId, HarmLabel>& gold) {
    return evaluate_with(preds, gold, [](const Prediction& p) { return p.final; });
}

EvalReport evaluate_prelim(std::span<const Prediction> preds,
                           const std::map<MemeId, HarmLabel>& gold) {
    return evaluate_with(preds, gold, [](const Prediction& p) { return p.prelim; });
}

} // namespace lorehm
