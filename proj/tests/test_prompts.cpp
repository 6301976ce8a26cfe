#include <gtest/gtest.h>

#include "lorehm/prompts.hpp"

using namespace lorehm;

namespace {

InsightSet two_insights() {
    InsightSet s;
    s.insights = {{1, "Sarcasm can hide hostility.", 3}, {2, "Check who the target is.", 2}};
    s.next_id = 3;
    return s;
}

bool contains(const std::string& hay, std::string_view needle) {
    return hay.find(needle) != std::string::npos;
}

} // namespace

TEST(CotPrompt, EmbedsTextAndFormatInstruction) {
    const MemeSample m{"m1", "m1.png", "when the vaccine kicks in", HarmLabel::harmless};
    const auto p = prompts::render_cot_prompt(m);
    EXPECT_TRUE(p.starts_with("Given the meme, with the Text: {when the vaccine kicks in} embedded in "
                              "the image {<image>}"));
    EXPECT_TRUE(contains(p, "{Thought: [Your analysis] Answer: [harmful/harmless]}"));
    EXPECT_FALSE(contains(p, "harmless\n"));
}

TEST(CotPrompt, TextRecoverable) {
    for (const std::string text : {"", "plain", "has } braces {", "line\nbreak", "##H## marker"}) {
        const MemeSample m{"m", "m.png", text, std::nullopt};
        EXPECT_EQ(prompts::extract_meme_text(prompts::render_cot_prompt(m)), text);
    }
}

TEST(CotPrompt, IndependentOfIdAndLabel) {
    const MemeSample a{"a", "a.png", "same", HarmLabel::harmful};
    const MemeSample b{"b", "b.png", "same", HarmLabel::harmless};
    EXPECT_EQ(prompts::render_cot_prompt(a), prompts::render_cot_prompt(b));
}

TEST(InsightList, NumberedWithOptionalImportance) {
    EXPECT_EQ(prompts::render_insight_list(two_insights(), true),
              "1. (importance 3) Sarcasm can hide hostility.\n2. (importance 2) Check who the target is.");
    EXPECT_EQ(prompts::render_insight_list(two_insights(), false),
              "1. Sarcasm can hide hostility.\n2. Check who the target is.");
    EXPECT_EQ(prompts::render_insight_list({}, true), prompts::kNoInsightsMarker);
}

TEST(ReflectPrompt, ContainsFailureAndLedger) {
    const Trajectory t{"m7", "Seems like a harmless pun.", HarmLabel::harmless, HarmLabel::harmful, false,
                       false};
    const auto p = prompts::render_reflect_prompt(t, two_insights());
    EXPECT_TRUE(contains(p, "Meme: m7\n"));
    EXPECT_TRUE(contains(p, "Thought: Seems like a harmless pun.\n"));
    EXPECT_TRUE(contains(p, "Your answer: harmless\n"));
    EXPECT_TRUE(contains(p, "Correct answer: harmful\n"));
    EXPECT_TRUE(contains(p, "Current insights (2/10):"));
    EXPECT_TRUE(contains(p, "at most 10 insights"));
    EXPECT_TRUE(contains(p, "1. (importance 3) Sarcasm can hide hostility."));
    for (auto op : {"ADD: <new insight>", "UPVOTE <n>", "DOWNVOTE <n>", "EDIT <n>: <revised insight>"}) {
        EXPECT_TRUE(contains(p, op)) << op;
    }
    EXPECT_FALSE(contains(p, prompts::kInsightSetFullMarker));
}

TEST(ReflectPrompt, FullSetForbidsAdd) {
    InsightSet s;
    s.capacity = 2;
    s.insights = {{1, "a", 2}, {2, "b", 2}};
    const Trajectory t{"m", "x", HarmLabel::harmful, HarmLabel::harmless, false, false};
    const auto p = prompts::render_reflect_prompt(t, s);
    EXPECT_TRUE(contains(p, prompts::kInsightSetFullMarker));
    EXPECT_TRUE(contains(p, "at most 2 insights"));
}

TEST(FinalPrompt, PriorThenInsightsThenCot) {
    const MemeSample m{"m", "m.png", "look at them", std::nullopt};
    const PreliminaryPrediction prelim{"m", HarmLabel::harmful, 4, 5};
    const auto p = prompts::render_final_prompt(m, prelim, two_insights());
    const auto prior = p.find("has labeled this meme as {harmful}, Please review");
    const auto insight = p.find("1. Sarcasm can hide hostility.");
    const auto cot = p.find("Given the meme, with the Text: {look at them}");
    ASSERT_NE(prior, std::string::npos);
    ASSERT_NE(insight, std::string::npos);
    ASSERT_NE(cot, std::string::npos);
    EXPECT_LT(prior, insight);
    EXPECT_LT(insight, cot);
    EXPECT_FALSE(contains(p, "importance"));
    EXPECT_EQ(prompts::extract_classifier_label(p), HarmLabel::harmful);
    EXPECT_EQ(prompts::extract_meme_text(p), "look at them");
}

TEST(FinalPrompt, EmptyInsightsMarker) {
    const MemeSample m{"m", "m.png", "t", std::nullopt};
    const auto p = prompts::render_final_prompt(m, {"m", HarmLabel::harmless, 1, 5}, {});
    EXPECT_TRUE(contains(p, prompts::kNoInsightsMarker));
    EXPECT_EQ(prompts::extract_classifier_label(p), HarmLabel::harmless);
}

TEST(Prompts, ExtractorsOnForeignText) {
    EXPECT_FALSE(prompts::extract_meme_text("hello"));
    EXPECT_FALSE(prompts::extract_classifier_label(prompts::render_cot_prompt({"m", "", "t", std::nullopt})));
}

TEST(Prompts, FormatReminderAppends) {
    const auto p = prompts::with_format_reminder("base");
    EXPECT_TRUE(p.starts_with("base\n\n"));
    EXPECT_TRUE(contains(p, "Answer: [harmful/harmless]"));
}
