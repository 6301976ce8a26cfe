#include "lorehm/prompts.hpp"

#include <sstream>

namespace lorehm::prompts {

namespace {

constexpr std::string_view kCotHead = "Given the meme, with the Text: {";
constexpr std::string_view kCotImage = "} embedded in the image {";
constexpr std::string_view kCotTail =
    "}, your task is to determine whether this meme is harmful or not, in order to maintain "
    "the harmlessness and integrity of information on the Internet. Please leverage your "
    "extensive knowledge to deeply analyze and understand this meme, and give your final "
    "judgment. Your output should strictly follow the format: {Thought: [Your analysis] "
    "Answer: [harmful/harmless]}.";

constexpr std::string_view kClassifierHead =
    "A classifier that can identify common features among multiple memes has labeled this "
    "meme as {";
constexpr std::string_view kClassifierTail =
    "}, Please review the classifier's judgment carefully and use your extensive knowledge to "
    "analyze and understand this meme before providing your final verdict. If you disagree "
    "with the classifier's judgment, you must provide exceptionally thorough and persuasive "
    "reasons.";

constexpr std::string_view kFinalInsightsHeading =
    "The following insights about harmful memes were distilled from earlier judgments:";

constexpr std::string_view kReflectInstruction =
    "You are an agent that learns to detect harmful memes by reflecting on its own mistakes. "
    "Below is a judgment you made about a meme that turned out to be wrong, followed by the "
    "current set of insights about meme harmfulness.\n"
    "First, analyze why the judgment failed. Then revise the insight set so that it holds "
    "general, high-level rules that help judge unseen memes, not details specific to this "
    "meme. You may perform these operations:\n"
    "ADD: <new insight> -- introduce a new generic insight.\n"
    "UPVOTE <n> -- agree with existing insight n.\n"
    "DOWNVOTE <n> -- disagree with existing insight n because it is wrong or misleading.\n"
    "EDIT <n>: <revised insight> -- modify the contents of existing insight n.\n"
    "The insight set holds at most {capacity} insights. Once it is full you are prohibited "
    "from producing the ADD operation; use UPVOTE, DOWNVOTE or EDIT instead.\n"
    "Write each operation on its own line, exactly in one of the formats above, where n is "
    "the number of the insight in the list below.";

constexpr std::string_view kFormatReminder =
    "Your previous reply could not be parsed. Reply strictly in the format: "
    "Thought: [Your analysis] Answer: [harmful/harmless]";

void append_cot_block(std::string& out, std::string_view text) {
    out.append(kCotHead);
    out.append(text);
    out.append(kCotImage);
    out.append(kImagePlaceholder);
    out.append(kCotTail);
}

} // namespace

std::string render_cot_prompt(const MemeSample& meme) {
    std::string out;
    append_cot_block(out, meme.text);
    return out;
}

std::string render_insight_list(const InsightSet& insights, bool with_importance) {
    if (insights.empty()) {
        return std::string(kNoInsightsMarker);
    }
    std::ostringstream out;
    for (std::size_t i = 0; i < insights.size(); ++i) {
        const auto& insight = insights.insights[i];
        if (i > 0) {
            out << '\n';
        }
        out << (i + 1) << ". ";
        if (with_importance) {
            out << "(importance " << insight.importance << ") ";
        }
        out << insight.text;
    }
    return out.str();
}

std::string render_reflect_prompt(const Trajectory& traj, const InsightSet& insights) {
    std::string instruction(kReflectInstruction);
    const std::string capacity_slot = "{capacity}";
    instruction.replace(instruction.find(capacity_slot), capacity_slot.size(),
                        std::to_string(insights.capacity));

    std::ostringstream out;
    out << instruction << "\n\n"
        << "Failed judgment:\n"
        << "Meme: " << traj.meme_id << '\n'
        << "Thought: " << traj.thought << '\n'
        << "Your answer: " << to_string(traj.answer) << '\n'
        << "Correct answer: " << to_string(traj.gold) << "\n\n"
        << "Current insights (" << insights.size() << '/' << insights.capacity << "):\n"
        << render_insight_list(insights, true);
    if (insights.full()) {
        out << "\n\n" << kInsightSetFullMarker;
    }
    return out.str();
}

std::string render_final_prompt(const MemeSample& meme, const PreliminaryPrediction& prelim,
                                const InsightSet& insights) {
    std::string out;
    out.append(kClassifierHead);
    out.append(to_string(prelim.value));
    out.append(kClassifierTail);
    out.append("\n\n");
    out.append(kFinalInsightsHeading);
    out.append("\n");
    out.append(render_insight_list(insights, false));
    out.append("\n\n");
    append_cot_block(out, meme.text);
    return out;
}

std::string with_format_reminder(std::string_view prompt) {
    std::string out(prompt);
    out.append("\n\n");
    out.append(kFormatReminder);
    return out;
}

std::optional<std::string> extract_meme_text(std::string_view prompt) {
    const auto head = prompt.find(kCotHead);
    if (head == std::string_view::npos) {
        return std::nullopt;
    }
    const auto start = head + kCotHead.size();
    const auto end = prompt.rfind(kCotImage);
    if (end == std::string_view::npos || end < start) {
        return std::nullopt;
    }
    return std::string(prompt.substr(start, end - start));
}

std::optional<HarmLabel> extract_classifier_label(std::string_view prompt) {
    const auto head = prompt.find(kClassifierHead);
    if (head == std::string_view::npos) {
        return std::nullopt;
    }
    const auto start = head + kClassifierHead.size();
    const auto end = prompt.find('}', start);
    if (end == std::string_view::npos) {
        return std::nullopt;
    }
    return label_from_string(prompt.substr(start, end - start));
}

} // namespace lorehm::prompts
