#include "lorehm/parsing.hpp"

#include <cctype>
#include <charconv>

namespace lorehm {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool iequals_at(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) {
        return false;
    }
    for (std::size_t i = 0; i < word.size(); ++i) {
        if (lower(text[pos + i]) != word[i]) {
            return false;
        }
    }
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

// Positions where "answer" appears as a whole word.
std::optional<std::size_t> last_answer_marker(std::string_view raw) {
    constexpr std::string_view word = "answer";
    std::optional<std::size_t> found;
    for (std::size_t pos = 0; pos + word.size() <= raw.size(); ++pos) {
        if (!iequals_at(raw, pos, word)) {
            continue;
        }
        const bool left_ok = pos == 0 || !is_alpha(raw[pos - 1]);
        const std::size_t after = pos + word.size();
        const bool right_ok = after == raw.size() || !is_alpha(raw[after]);
        if (left_ok && right_ok) {
            found = pos;
        }
    }
    return found;
}

std::optional<HarmLabel> first_label_token(std::string_view tail) {
    std::size_t i = 0;
    while (i < tail.size()) {
        if (!is_alpha(tail[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < tail.size() && is_alpha(tail[j])) {
            ++j;
        }
        const auto token = tail.substr(i, j - i);
        if (token.size() == 7 && iequals_at(token, 0, "harmful")) {
            return HarmLabel::harmful;
        }
        if (token.size() == 8 && iequals_at(token, 0, "harmless")) {
            return HarmLabel::harmless;
        }
        i = j;
    }
    return std::nullopt;
}

std::optional<std::size_t> parse_index(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return value;
}

std::optional<Operation> parse_operation_line(std::string_view line) {
    if (iequals_at(line, 0, "add")) {
        auto rest = trim(line.substr(3));
        if (rest.empty() || rest.front() != ':') {
            return std::nullopt;
        }
        auto text = trim(rest.substr(1));
        if (text.empty()) {
            return std::nullopt;
        }
        return Operation::add(std::string(text));
    }
    for (auto [word, kind] : {std::pair{std::string_view("upvote"), OperationKind::upvote},
                              std::pair{std::string_view("downvote"), OperationKind::downvote}}) {
        if (iequals_at(line, 0, word)) {
            auto rest = line.substr(word.size());
            if (!rest.empty() && !is_space(rest.front())) {
                return std::nullopt;
            }
            auto n = parse_index(rest);
            if (!n) {
                return std::nullopt;
            }
            return Operation{kind, *n, std::nullopt};
        }
    }
    if (iequals_at(line, 0, "edit")) {
        auto rest = line.substr(4);
        if (rest.empty() || !is_space(rest.front())) {
            return std::nullopt;
        }
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos) {
            return std::nullopt;
        }
        auto n = parse_index(rest.substr(0, colon));
        auto text = trim(rest.substr(colon + 1));
        if (!n || text.empty()) {
            return std::nullopt;
        }
        return Operation::edit(*n, std::string(text));
    }
    return std::nullopt;
}

} // namespace

std::optional<Verdict> parse_verdict(std::string_view raw) {
    const auto marker = last_answer_marker(raw);
    if (!marker) {
        return std::nullopt;
    }
    const auto answer = first_label_token(raw.substr(*marker + 6));
    if (!answer) {
        return std::nullopt;
    }

    auto head = trim(raw.substr(0, *marker));
    if (!head.empty() && head.front() == '{') {
        head = trim(head.substr(1));
    }
    if (iequals_at(head, 0, "thought")) {
        auto rest = trim(head.substr(7));
        if (!rest.empty() && rest.front() == ':') {
            head = trim(rest.substr(1));
        }
    }
    return Verdict{std::string(head), *answer, std::string(raw), 1};
}

std::string format_verdict(std::string_view thought, HarmLabel answer) {
    std::string out = "Thought: ";
    out.append(thought);
    out.append(" Answer: ");
    out.append(to_string(answer));
    return out;
}

ParsedOperations parse_operations(std::string_view raw) noexcept {
    ParsedOperations out;
    try {
        std::size_t start = 0;
        while (start <= raw.size()) {
            auto end = raw.find('\n', start);
            if (end == std::string_view::npos) {
                end = raw.size();
            }
            const auto line = trim(raw.substr(start, end - start));
            if (!line.empty()) {
                if (auto op = parse_operation_line(line)) {
                    out.operations.push_back(std::move(*op));
                } else {
                    ++out.skipped_lines;
                }
            }
            start = end + 1;
        }
    } catch (...) {
        // Only allocation can throw above; report what was parsed so far.
    }
    return out;
}

} // namespace lorehm
