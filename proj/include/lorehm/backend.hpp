#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "lorehm/parsing.hpp"

namespace lorehm {

struct LmmParams {
    double temperature = 0.0;
    std::string model;
};

struct LmmRequest {
    std::string template_id;
    std::string prompt;
    std::optional<std::string> image_ref;
    LmmParams params;
};

struct LmmResponse {
    std::string text;
    std::int64_t latency_ms = 0;
    std::string backend_id;
};

// Stable 64-bit FNV-1a over (template id, prompt, image file name, model),
// rendered as 16 hex digits. Keys mock fixtures and the response cache.
std::string fingerprint(const LmmRequest& request);

class LmmBackend {
public:
    virtual ~LmmBackend() = default;

    // Must be safe to call from several threads at once.
    virtual LmmResponse complete(const LmmRequest& request) = 0;
    virtual std::string id() const = 0;
};

// fingerprint -> text, as stored in mock_responses.jsonl and cache.jsonl.
using ResponseTable = std::map<std::string, std::string>;

ResponseTable load_response_table(const std::filesystem::path& path);

// Canned behaviour for requests with no scripted fixture.
enum class MockPersona {
    none,        // missing fixture is an error
    oracle,      // harmful iff the meme text contains a marker token
    sycophantic, // final prompts echo the classifier's label
    contrarian,  // final prompts flip the classifier's label
    harmful,     // always answers harmful
    harmless,    // always answers harmless
    garbage,     // never produces a parseable answer
};

std::optional<MockPersona> persona_from_string(std::string_view name) noexcept;
std::string_view to_string(MockPersona persona) noexcept;

struct MockOptions {
    ResponseTable fixtures;
    MockPersona persona = MockPersona::oracle;
    std::vector<std::string> markers{"##H##"};
};

// Deterministic offline backend. Fixture lookup by fingerprint wins; otherwise
// the persona decides. Cot requests under sycophantic/contrarian fall back to
// the oracle rule since they carry no classifier label. Reflection requests
// under every answering persona ADD one insight per failure until the set is
// full, then UPVOTE the first insight.
class MockBackend final : public LmmBackend {
public:
    explicit MockBackend(MockOptions options);

    LmmResponse complete(const LmmRequest& request) override;
    std::string id() const override;

private:
    std::string persona_reply(const LmmRequest& request) const;
    HarmLabel oracle_label(const std::string& prompt) const;

    MockOptions options_;
};

// Write-through cache keyed by fingerprint, persisted as JSONL.
class CachingBackend final : public LmmBackend {
public:
    CachingBackend(std::shared_ptr<LmmBackend> inner, std::filesystem::path cache_file);
    ~CachingBackend() override;

    CachingBackend(const CachingBackend&) = delete;
    CachingBackend& operator=(const CachingBackend&) = delete;

    LmmResponse complete(const LmmRequest& request) override;
    std::string id() const override { return inner_->id(); }

    // Rewrites the cache file sorted by fingerprint.
    void flush() const;

    std::size_t hits() const;
    std::size_t misses() const;

private:
    std::shared_ptr<LmmBackend> inner_;
    std::filesystem::path cache_file_;
    mutable std::mutex mutex_;
    ResponseTable table_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

// Bounds the number of in-flight requests to the wrapped backend.
class LimitedBackend final : public LmmBackend {
public:
    LimitedBackend(std::shared_ptr<LmmBackend> inner, std::ptrdiff_t max_in_flight);

    LmmResponse complete(const LmmRequest& request) override;
    std::string id() const override { return inner_->id(); }

private:
    std::shared_ptr<LmmBackend> inner_;
    std::counting_semaphore<> slots_;
};

struct RemoteOptions {
    std::string endpoint; // full URL of the chat-completions route
    std::string api_key;
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat-completions client. Transport errors, 429 and 5xx
// are retried with exponential backoff; other statuses fail immediately.
class RemoteBackend final : public LmmBackend {
public:
    explicit RemoteBackend(RemoteOptions options);

    LmmResponse complete(const LmmRequest& request) override;
    std::string id() const override;

    // Request body as sent on the wire; exposed for tests.
    static std::string build_body(const LmmRequest& request);

private:
    RemoteOptions options_;
    std::string base_;
    std::string path_;
};

struct VerdictOutcome {
    Verdict verdict;
    bool flagged = false;
};

// complete -> parse_verdict; on failure retries once with a format reminder,
// and on a second failure falls back to harmless with flagged = true.
VerdictOutcome request_verdict(LmmBackend& backend, const LmmRequest& request);

} // namespace lorehm
