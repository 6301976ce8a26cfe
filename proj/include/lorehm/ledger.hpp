#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lorehm/types.hpp"

namespace lorehm {

inline constexpr std::size_t kDefaultInsightCapacity = 10;
inline constexpr int kInitialImportance = 2;

enum class OperationKind { add, upvote, downvote, edit };

std::string_view to_string(OperationKind kind) noexcept;

// One revision proposed by the reflection step. Indices are 1-based positions
// into the insight list as it stands when the operation is applied.
struct Operation {
    OperationKind kind = OperationKind::add;
    std::optional<std::size_t> target_index;
    std::optional<std::string> text;

    static Operation add(std::string text) { return {OperationKind::add, std::nullopt, std::move(text)}; }
    static Operation upvote(std::size_t n) { return {OperationKind::upvote, n, std::nullopt}; }
    static Operation downvote(std::size_t n) { return {OperationKind::downvote, n, std::nullopt}; }
    static Operation edit(std::size_t n, std::string text) { return {OperationKind::edit, n, std::move(text)}; }

    // Field presence matches the kind and any text is non-empty.
    bool well_formed() const noexcept;

    bool operator==(const Operation&) const = default;
};

struct Insight {
    std::int64_t id = 0;
    std::string text;
    int importance = kInitialImportance;

    bool operator==(const Insight&) const = default;
};

struct InsightSet {
    std::vector<Insight> insights;
    std::size_t capacity = kDefaultInsightCapacity;
    std::int64_t next_id = 1;

    std::size_t size() const noexcept { return insights.size(); }
    bool empty() const noexcept { return insights.empty(); }
    bool full() const noexcept { return insights.size() >= capacity; }

    bool operator==(const InsightSet&) const = default;
};

struct OperationTally {
    std::size_t applied = 0;
    std::size_t out_of_range = 0;
    std::size_t malformed = 0;
    std::size_t rejected_adds = 0;

    OperationTally& operator+=(const OperationTally& o) noexcept;
    bool operator==(const OperationTally&) const = default;
};

// Applies operations strictly in order. ADD appends at importance 2 unless
// the set is full; UPVOTE and EDIT add one; DOWNVOTE subtracts one and removes
// the insight at zero. Invalid operations are skipped and counted in `tally`.
InsightSet apply_operations(InsightSet insights, std::span<const Operation> ops,
                            OperationTally* tally = nullptr);

// One zero-shot judgment of a reference meme.
struct Trajectory {
    MemeId meme_id;
    std::string thought;
    HarmLabel answer = HarmLabel::harmless;
    HarmLabel gold = HarmLabel::harmless;
    bool correct = false;
    bool flagged = false;

    bool operator==(const Trajectory&) const = default;
};

nlohmann::json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

nlohmann::json to_json(const InsightSet& set);
InsightSet insight_set_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Operation& op);

} // namespace lorehm
