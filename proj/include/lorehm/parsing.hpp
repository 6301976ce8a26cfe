#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lorehm/ledger.hpp"
#include "lorehm/types.hpp"

namespace lorehm {

struct Verdict {
    std::string thought;
    HarmLabel answer = HarmLabel::harmless;
    std::string raw;
    int parse_attempts = 1;
};

// Finds the last standalone, case-insensitive "answer" and takes the first
// following harmful/harmless token. Text after a leading "Thought:" marker
// (or, without one, all text) up to the answer marker becomes the thought.
// Returns nullopt when no answer token follows the marker.
std::optional<Verdict> parse_verdict(std::string_view raw);

// Canonical "Thought: ... Answer: ..." rendering; parse_verdict inverts it.
std::string format_verdict(std::string_view thought, HarmLabel answer);

struct ParsedOperations {
    std::vector<Operation> operations;
    std::size_t skipped_lines = 0;
};

// One operation per line, keywords case-insensitive:
//   ADD: <text> | UPVOTE <n> | DOWNVOTE <n> | EDIT <n>: <text>
// Non-matching non-blank lines are skipped and counted. Never throws.
ParsedOperations parse_operations(std::string_view raw) noexcept;

} // namespace lorehm
