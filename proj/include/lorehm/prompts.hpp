#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "lorehm/ledger.hpp"
#include "lorehm/rsa.hpp"
#include "lorehm/types.hpp"

namespace lorehm::prompts {

// Template ids feed into request fingerprints; bump the suffix whenever the
// wording of a template changes.
inline constexpr std::string_view kCotTemplateId = "cot.v1";
inline constexpr std::string_view kReflectTemplateId = "reflect.v1";
inline constexpr std::string_view kFinalTemplateId = "final.v1";

inline constexpr std::string_view kNoInsightsMarker = "No insights recorded yet.";
inline constexpr std::string_view kInsightSetFullMarker =
    "The insight set is full. ADD is not allowed in this round.";
inline constexpr std::string_view kImagePlaceholder = "<image>";

// Zero-shot chain-of-thought judgment prompt. The image travels out-of-band.
std::string render_cot_prompt(const MemeSample& meme);

std::string render_reflect_prompt(const Trajectory& traj, const InsightSet& insights);

// Classifier prior, then the insight list, then the chain-of-thought block.
std::string render_final_prompt(const MemeSample& meme, const PreliminaryPrediction& prelim,
                                const InsightSet& insights);

// Appended to a prompt when the first reply had no parseable answer.
std::string with_format_reminder(std::string_view prompt);

// "1. (importance 2) text" lines, or the empty marker.
std::string render_insight_list(const InsightSet& insights, bool with_importance);

// Pulls the meme text back out of a rendered cot/final prompt.
std::optional<std::string> extract_meme_text(std::string_view prompt);

// Reads the classifier label back out of a rendered final prompt.
std::optional<HarmLabel> extract_classifier_label(std::string_view prompt);

} // namespace lorehm::prompts
