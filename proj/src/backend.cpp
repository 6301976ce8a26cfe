#include "lorehm/backend.hpp"

#include <cstdio>

#include "lorehm/error.hpp"
#include "lorehm/io.hpp"
#include "lorehm/prompts.hpp"

namespace lorehm {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, std::string_view field) {
    // Length prefix keeps ("ab","c") and ("a","bc") apart.
    const std::string prefix = std::to_string(field.size()) + ":";
    for (char c : prefix) {
        h = (h ^ static_cast<unsigned char>(c)) * kFnvPrime;
    }
    for (char c : field) {
        h = (h ^ static_cast<unsigned char>(c)) * kFnvPrime;
    }
}

std::string line_value(std::string_view prompt, std::string_view key) {
    const auto pos = prompt.find(key);
    if (pos == std::string_view::npos) {
        return {};
    }
    const auto start = pos + key.size();
    const auto end = prompt.find('\n', start);
    return std::string(prompt.substr(start, end == std::string_view::npos ? end : end - start));
}

} // namespace

std::string fingerprint(const LmmRequest& request) {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, request.template_id);
    fnv_mix(h, request.prompt);
    fnv_mix(h, request.image_ref ? std::filesystem::path(*request.image_ref).filename().string()
                                 : std::string{});
    fnv_mix(h, request.params.model);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ResponseTable load_response_table(const std::filesystem::path& path) {
    ResponseTable table;
    io::for_each_json_line(path, [&](std::size_t line_no, const io::Json& row) {
        if (!row.is_object() || !row.contains("fingerprint") || !row.contains("text")) {
            throw Error(path.string() + ": line " + std::to_string(line_no) +
                        ": expected {\"fingerprint\", \"text\"}");
        }
        table[row["fingerprint"].get<std::string>()] = row["text"].get<std::string>();
    });
    return table;
}

std::optional<MockPersona> persona_from_string(std::string_view name) noexcept {
    for (auto p : {MockPersona::none, MockPersona::oracle, MockPersona::sycophantic,
                   MockPersona::contrarian, MockPersona::harmful, MockPersona::harmless,
                   MockPersona::garbage}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    return std::nullopt;
}

std::string_view to_string(MockPersona persona) noexcept {
    switch (persona) {
    case MockPersona::none:
        return "none";
    case MockPersona::oracle:
        return "oracle";
    case MockPersona::sycophantic:
        return "sycophantic";
    case MockPersona::contrarian:
        return "contrarian";
    case MockPersona::harmful:
        return "harmful";
    case MockPersona::harmless:
        return "harmless";
    case MockPersona::garbage:
        return "garbage";
    }
    return "?";
}

MockBackend::MockBackend(MockOptions options) : options_(std::move(options)) {}

std::string MockBackend::id() const { return "mock:" + std::string(to_string(options_.persona)); }

LmmResponse MockBackend::complete(const LmmRequest& request) {
    if (request.prompt.empty()) {
        throw BackendError("mock backend: empty prompt");
    }
    if (auto it = options_.fixtures.find(fingerprint(request)); it != options_.fixtures.end()) {
        return {it->second, 0, id()};
    }
    return {persona_reply(request), 0, id()};
}

HarmLabel MockBackend::oracle_label(const std::string& prompt) const {
    const auto text = prompts::extract_meme_text(prompt).value_or(prompt);
    for (const auto& marker : options_.markers) {
        if (!marker.empty() && text.find(marker) != std::string::npos) {
            return HarmLabel::harmful;
        }
    }
    return HarmLabel::harmless;
}

std::string MockBackend::persona_reply(const LmmRequest& request) const {
    const auto persona = options_.persona;
    if (persona == MockPersona::none) {
        throw BackendError("mock backend: no fixture for fingerprint " + fingerprint(request));
    }
    if (persona == MockPersona::garbage) {
        return "I cannot decide.";
    }

    if (request.template_id == prompts::kReflectTemplateId) {
        if (request.prompt.find(prompts::kInsightSetFullMarker) != std::string::npos) {
            return "UPVOTE 1";
        }
        return "ADD: Memes like " + line_value(request.prompt, "Meme: ") +
               " carry implicit cues; judge them " + line_value(request.prompt, "Correct answer: ") +
               ".";
    }

    const bool is_final = request.template_id == prompts::kFinalTemplateId;
    const auto prior = is_final ? prompts::extract_classifier_label(request.prompt) : std::nullopt;
    switch (persona) {
    case MockPersona::harmful:
    case MockPersona::harmless: {
        const auto label = persona == MockPersona::harmful ? HarmLabel::harmful : HarmLabel::harmless;
        return format_verdict("Fixed persona.", label);
    }
    case MockPersona::sycophantic:
        if (prior) {
            return format_verdict("I agree with the classifier.", *prior);
        }
        break;
    case MockPersona::contrarian:
        if (prior) {
            return format_verdict("I disagree with the classifier.", opposite(*prior));
        }
        break;
    case MockPersona::oracle:
        if (prior && oracle_label(request.prompt) == HarmLabel::harmless) {
            return format_verdict("No marker; deferring to the classifier.", *prior);
        }
        break;
    default:
        break;
    }
    const auto label = oracle_label(request.prompt);
    return format_verdict(label == HarmLabel::harmful ? "The text carries a harm marker."
                                                      : "The text carries no harm marker.",
                          label);
}

CachingBackend::CachingBackend(std::shared_ptr<LmmBackend> inner, std::filesystem::path cache_file)
    : inner_(std::move(inner)), cache_file_(std::move(cache_file)) {
    if (std::filesystem::exists(cache_file_)) {
        table_ = load_response_table(cache_file_);
    }
}

LmmResponse CachingBackend::complete(const LmmRequest& request) {
    const auto key = fingerprint(request);
    {
        std::lock_guard lock(mutex_);
        if (auto it = table_.find(key); it != table_.end()) {
            ++hits_;
            return {it->second, 0, inner_->id()};
        }
    }
    auto response = inner_->complete(request);
    std::lock_guard lock(mutex_);
    ++misses_;
    if (table_.emplace(key, response.text).second) {
        io::append_line(cache_file_, io::dump_line({{"fingerprint", key}, {"text", response.text}}));
    }
    return response;
}

CachingBackend::~CachingBackend() {
    try {
        flush();
    } catch (...) {
        // The append-only file written during the run is still valid.
    }
}

void CachingBackend::flush() const {
    std::lock_guard lock(mutex_);
    if (table_.empty()) {
        return;
    }
    std::string out;
    for (const auto& [key, text] : table_) {
        out += io::dump_line({{"fingerprint", key}, {"text", text}});
        out += '\n';
    }
    io::write_file_atomic(cache_file_, out);
}

std::size_t CachingBackend::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t CachingBackend::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

LimitedBackend::LimitedBackend(std::shared_ptr<LmmBackend> inner, std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(max_in_flight) {
    if (max_in_flight < 1) {
        throw Error("backend concurrency limit must be at least 1");
    }
}

LmmResponse LimitedBackend::complete(const LmmRequest& request) {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{slots_};
    return inner_->complete(request);
}

VerdictOutcome request_verdict(LmmBackend& backend, const LmmRequest& request) {
    auto first = backend.complete(request);
    if (auto v = parse_verdict(first.text)) {
        return {std::move(*v), false};
    }
    LmmRequest retry = request;
    retry.prompt = prompts::with_format_reminder(request.prompt);
    auto second = backend.complete(retry);
    if (auto v = parse_verdict(second.text)) {
        v->parse_attempts = 2;
        return {std::move(*v), false};
    }
    return {Verdict{"", HarmLabel::harmless, second.text, 2}, true};
}

} // namespace lorehm
