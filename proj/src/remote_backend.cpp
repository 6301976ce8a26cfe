#include <thread>

#include <httplib.h>
#include <openssl/evp.h>

#include "lorehm/backend.hpp"
#include "lorehm/error.hpp"
#include "lorehm/io.hpp"

namespace lorehm {

namespace {

std::string base64(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                        reinterpret_cast<const unsigned char*>(bytes.data()),
                                        static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(written));
    return out;
}

std::string mime_type(const std::filesystem::path& image) {
    auto ext = image.extension().string();
    for (auto& c : ext) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (ext == ".jpg" || ext == ".jpeg") {
        return "image/jpeg";
    }
    if (ext == ".gif") {
        return "image/gif";
    }
    if (ext == ".webp") {
        return "image/webp";
    }
    return "image/png";
}

std::string excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

} // namespace

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
    const auto& url = options_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error("remote endpoint must be an absolute http(s) URL: \"" + url + "\"");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    base_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string RemoteBackend::id() const { return "remote:" + options_.endpoint; }

std::string RemoteBackend::build_body(const LmmRequest& request) {
    auto content = io::Json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt}});
    if (request.image_ref) {
        const std::filesystem::path image(*request.image_ref);
        const auto data = "data:" + mime_type(image) + ";base64," + base64(io::read_file(image));
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", data}}}});
    }
    io::Json body = {{"model", request.params.model},
                     {"temperature", request.params.temperature},
                     {"messages", io::Json::array({{{"role", "user"}, {"content", content}}})}};
    return body.dump();
}

LmmResponse RemoteBackend::complete(const LmmRequest& request) {
    const auto body = build_body(request);
    const auto started = std::chrono::steady_clock::now();

    httplib::Client client(base_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
    }

    auto backoff = options_.initial_backoff;
    std::string last_error;
    int last_status = 0;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto result = client.Post(path_, headers, body, "application/json");
        if (!result) {
            last_status = 0;
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        last_status = result->status;
        if (result->status >= 200 && result->status < 300) {
            std::string text;
            try {
                const auto reply = io::Json::parse(result->body);
                text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const io::Json::exception& e) {
                throw BackendError("remote backend: unexpected response shape (" +
                                       std::string(e.what()) + "): " + excerpt(result->body),
                                   result->status);
            }
            const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            return {std::move(text), elapsed.count(), id()};
        }
        last_error = "HTTP " + std::to_string(result->status) + ": " + excerpt(result->body);
        const bool retryable = result->status == 429 || result->status >= 500;
        if (!retryable) {
            break;
        }
    }
    throw BackendError("remote backend request failed: " + last_error, last_status);
}

} // namespace lorehm
