#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace lorehm {

using MemeId = std::string;

enum class HarmLabel { harmful, harmless };

constexpr std::string_view to_string(HarmLabel label) noexcept {
    return label == HarmLabel::harmful ? "harmful" : "harmless";
}

constexpr HarmLabel opposite(HarmLabel label) noexcept {
    return label == HarmLabel::harmful ? HarmLabel::harmless : HarmLabel::harmful;
}

// Accepts only the two canonical lowercase spellings.
std::optional<HarmLabel> label_from_string(std::string_view text) noexcept;

struct MemeSample {
    MemeId id;
    std::string image_path;
    std::string text;
    std::optional<HarmLabel> label;

    bool operator==(const MemeSample&) const = default;
};

} // namespace lorehm
