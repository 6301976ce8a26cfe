#include "lorehm/ledger.hpp"

#include "lorehm/error.hpp"

namespace lorehm {

std::string_view to_string(OperationKind kind) noexcept {
    switch (kind) {
    case OperationKind::add:
        return "ADD";
    case OperationKind::upvote:
        return "UPVOTE";
    case OperationKind::downvote:
        return "DOWNVOTE";
    case OperationKind::edit:
        return "EDIT";
    }
    return "?";
}

bool Operation::well_formed() const noexcept {
    const bool has_text = text.has_value() && !text->empty();
    switch (kind) {
    case OperationKind::add:
        return has_text && !target_index;
    case OperationKind::upvote:
    case OperationKind::downvote:
        return target_index.has_value() && !text;
    case OperationKind::edit:
        return target_index.has_value() && has_text;
    }
    return false;
}

OperationTally& OperationTally::operator+=(const OperationTally& o) noexcept {
    applied += o.applied;
    out_of_range += o.out_of_range;
    malformed += o.malformed;
    rejected_adds += o.rejected_adds;
    return *this;
}

InsightSet apply_operations(InsightSet set, std::span<const Operation> ops, OperationTally* tally) {
    OperationTally local;
    for (const auto& op : ops) {
        if (!op.well_formed()) {
            ++local.malformed;
            continue;
        }
        if (op.kind == OperationKind::add) {
            if (set.full()) {
                ++local.rejected_adds;
                continue;
            }
            set.insights.push_back({set.next_id++, *op.text, kInitialImportance});
            ++local.applied;
            continue;
        }
        const std::size_t n = *op.target_index;
        if (n < 1 || n > set.insights.size()) {
            ++local.out_of_range;
            continue;
        }
        auto& insight = set.insights[n - 1];
        switch (op.kind) {
        case OperationKind::upvote:
            ++insight.importance;
            break;
        case OperationKind::edit:
            insight.text = *op.text;
            ++insight.importance;
            break;
        case OperationKind::downvote:
            if (--insight.importance <= 0) {
                set.insights.erase(set.insights.begin() + static_cast<std::ptrdiff_t>(n - 1));
            }
            break;
        case OperationKind::add:
            break;
        }
        ++local.applied;
    }
    if (tally) {
        *tally += local;
    }
    return set;
}

nlohmann::json to_json(const Trajectory& t) {
    return {{"meme_id", t.meme_id},
            {"thought", t.thought},
            {"answer", to_string(t.answer)},
            {"gold", to_string(t.gold)},
            {"correct", t.correct},
            {"flagged", t.flagged}};
}

namespace {

HarmLabel label_field(const nlohmann::json& j, const char* key) {
    auto label = label_from_string(j.at(key).get<std::string>());
    if (!label) {
        throw Error(std::string("bad label in field \"") + key + "\"");
    }
    return *label;
}

} // namespace

Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    t.meme_id = j.at("meme_id").get<std::string>();
    t.thought = j.at("thought").get<std::string>();
    t.answer = label_field(j, "answer");
    t.gold = label_field(j, "gold");
    t.correct = j.at("correct").get<bool>();
    t.flagged = j.value("flagged", false);
    if (t.correct != (t.answer == t.gold)) {
        throw Error("trajectory \"" + t.meme_id + "\": correct flag disagrees with answer/gold");
    }
    return t;
}

nlohmann::json to_json(const InsightSet& set) {
    auto rows = nlohmann::json::array();
    for (const auto& i : set.insights) {
        rows.push_back({{"id", i.id}, {"text", i.text}, {"importance", i.importance}});
    }
    return {{"capacity", set.capacity}, {"next_id", set.next_id}, {"insights", std::move(rows)}};
}

InsightSet insight_set_from_json(const nlohmann::json& j) {
    InsightSet set;
    set.capacity = j.at("capacity").get<std::size_t>();
    set.next_id = j.at("next_id").get<std::int64_t>();
    for (const auto& row : j.at("insights")) {
        set.insights.push_back({row.at("id").get<std::int64_t>(), row.at("text").get<std::string>(),
                                row.at("importance").get<int>()});
    }
    return set;
}

nlohmann::json to_json(const Operation& op) {
    nlohmann::json j = {{"kind", to_string(op.kind)}};
    if (op.target_index) {
        j["index"] = *op.target_index;
    }
    if (op.text) {
        j["text"] = *op.text;
    }
    return j;
}

} // namespace lorehm
