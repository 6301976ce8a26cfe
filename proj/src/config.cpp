#include "lorehm/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lorehm/backend.hpp"
#include "lorehm/error.hpp"
#include "lorehm/io.hpp"

namespace lorehm {

namespace pt = boost::property_tree;

void RunConfig::validate() const {
    if (k == 0 || k % 2 == 0) {
        throw ConfigError("rsa.k", "rsa.k must be an odd number (got " + std::to_string(k) + ")");
    }
    if (n_shot == 0 || n_shot % 2 != 0) {
        throw ConfigError("dataset.n_shot",
                          "dataset.n_shot must be a positive even number for balanced classes");
    }
    if (k >= n_shot) {
        throw ConfigError("rsa.k", "rsa.k must be smaller than dataset.n_shot");
    }
    if (capacity < 1) {
        throw ConfigError("mia.capacity", "mia.capacity must be at least 1");
    }
    if (seeds.empty()) {
        throw ConfigError("dataset.seeds", "dataset.seeds must not be empty");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("dataset.seeds", "dataset.seeds must be distinct");
    }
    if (!std::isfinite(alpha) || !std::isfinite(beta)) {
        throw ConfigError("embedding.alpha", "fusion weights must be finite");
    }
    if (temperature != 0.0) {
        throw ConfigError("backend.temperature", "backend.temperature must be 0 (greedy decoding)");
    }
    if (concurrency < 1) {
        throw ConfigError("engine.concurrency", "engine.concurrency must be at least 1");
    }
    if (backend.kind != "remote" && backend.kind != "mock" && backend.kind != "oracle") {
        throw ConfigError("backend.kind", "backend.kind must be remote, mock or oracle");
    }
    if (backend.kind == "remote" && backend.endpoint.empty()) {
        throw ConfigError("backend.endpoint", "remote backend needs backend.endpoint");
    }
    if (!persona_from_string(backend.persona)) {
        throw ConfigError("backend.persona", "unknown mock persona \"" + backend.persona + "\"");
    }
    if (backend.max_retries < 0) {
        throw ConfigError("backend.max_retries", "backend.max_retries must be >= 0");
    }
    if (train_manifest.empty()) {
        throw ConfigError("paths.train_manifest", "paths.train_manifest is required");
    }
    if (test_manifest.empty()) {
        throw ConfigError("paths.test_manifest", "paths.test_manifest is required");
    }
    if (embeddings.empty()) {
        throw ConfigError("paths.embeddings", "paths.embeddings is required");
    }
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string unquote(std::string s) {
    s = trim(std::move(s));
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

std::vector<std::string> split_list(const std::string& field, std::string raw) {
    raw = trim(std::move(raw));
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') {
        throw ConfigError(field, field + " must be a [..] list");
    }
    std::vector<std::string> out;
    std::stringstream items(raw.substr(1, raw.size() - 2));
    std::string item;
    while (std::getline(items, item, ',')) {
        item = unquote(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

template <typename T>
T parse_number(const std::string& field, const std::string& raw) {
    std::istringstream in(unquote(raw));
    T value{};
    in >> value;
    if (!in || !(in >> std::ws).eof()) {
        throw ConfigError(field, field + ": not a valid number: \"" + raw + "\"");
    }
    return value;
}

std::size_t parse_count(const std::string& field, const std::string& raw) {
    const auto v = parse_number<long long>(field, raw);
    if (v < 0) {
        throw ConfigError(field, field + " must be non-negative");
    }
    return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& field, const std::string& raw) {
    const auto v = unquote(raw);
    if (v == "true") {
        return true;
    }
    if (v == "false") {
        return false;
    }
    throw ConfigError(field, field + " must be true or false");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& raw) {
    const std::filesystem::path p(unquote(raw));
    if (p.empty() || p.is_absolute()) {
        return p;
    }
    return base / p;
}

} // namespace

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("file", std::string("config syntax error: ") + e.what());
    }

    RunConfig c;
    for (const auto& [section, entries] : tree) {
        if (entries.empty() && !entries.data().empty()) {
            throw ConfigError(section, "key \"" + section + "\" must live inside a [section]");
        }
        for (const auto& [key, node] : entries) {
            const std::string field = section + "." + key;
            const std::string raw = node.data();
            if (field == "paths.train_manifest") {
                c.train_manifest = resolve(base_dir, raw);
            } else if (field == "paths.test_manifest") {
                c.test_manifest = resolve(base_dir, raw);
            } else if (field == "paths.embeddings") {
                c.embeddings = resolve(base_dir, raw);
            } else if (field == "paths.run_dir") {
                c.run_dir = resolve(base_dir, raw);
            } else if (field == "embedding.alpha") {
                c.alpha = parse_number<double>(field, raw);
            } else if (field == "embedding.beta") {
                c.beta = parse_number<double>(field, raw);
            } else if (field == "rsa.k") {
                c.k = parse_count(field, raw);
            } else if (field == "dataset.n_shot") {
                c.n_shot = parse_count(field, raw);
            } else if (field == "dataset.seeds") {
                c.seeds.clear();
                for (const auto& s : split_list(field, raw)) {
                    c.seeds.push_back(parse_number<std::uint64_t>(field, s));
                }
            } else if (field == "mia.capacity") {
                c.capacity = parse_count(field, raw);
            } else if (field == "engine.concurrency") {
                c.concurrency = parse_count(field, raw);
            } else if (field == "backend.kind") {
                c.backend.kind = unquote(raw);
            } else if (field == "backend.endpoint") {
                c.backend.endpoint = unquote(raw);
            } else if (field == "backend.model") {
                c.backend.model = unquote(raw);
            } else if (field == "backend.fixtures") {
                c.backend.fixtures = resolve(base_dir, raw);
            } else if (field == "backend.persona") {
                c.backend.persona = unquote(raw);
            } else if (field == "backend.markers") {
                c.backend.markers = split_list(field, raw);
            } else if (field == "backend.temperature") {
                c.temperature = parse_number<double>(field, raw);
            } else if (field == "backend.max_retries") {
                c.backend.max_retries = parse_number<int>(field, raw);
            } else if (field == "backend.initial_backoff_ms") {
                c.backend.initial_backoff_ms = parse_number<int>(field, raw);
            } else if (field == "backend.timeout_s") {
                c.backend.timeout_s = parse_number<int>(field, raw);
            } else if (field == "backend.cache") {
                c.backend.cache = parse_bool(field, raw);
            } else {
                throw ConfigError(field, "unknown config key \"" + field + "\"");
            }
        }
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("file", "cannot open config " + path.string());
    }
    return parse_config(in, path.parent_path());
}

void apply_environment(RunConfig& config) {
    if (const char* key = std::getenv("LOREHM_API_KEY"); key && *key) {
        config.backend.api_key = key;
    }
    if (const char* endpoint = std::getenv("LOREHM_ENDPOINT"); endpoint && *endpoint) {
        config.backend.endpoint = endpoint;
    }
}

std::string render_config(const RunConfig& c) {
    std::ostringstream out;
    auto quoted = [](const std::string& s) { return "\"" + s + "\""; };
    auto list = [&](const auto& items, bool quote) {
        std::string s = "[";
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i > 0) {
                s += ", ";
            }
            if constexpr (std::is_same_v<std::decay_t<decltype(items[i])>, std::string>) {
                s += quote ? quoted(items[i]) : items[i];
            } else {
                s += std::to_string(items[i]);
            }
        }
        return s + "]";
    };
    char num[64];
    auto real = [&](double v) {
        std::snprintf(num, sizeof num, "%.17g", v);
        return std::string(num);
    };
    out << "[paths]\n"
        << "train_manifest = " << quoted(c.train_manifest.string()) << '\n'
        << "test_manifest = " << quoted(c.test_manifest.string()) << '\n'
        << "embeddings = " << quoted(c.embeddings.string()) << '\n'
        << "run_dir = " << quoted(c.run_dir.string()) << "\n\n"
        << "[embedding]\nalpha = " << real(c.alpha) << "\nbeta = " << real(c.beta) << "\n\n"
        << "[rsa]\nk = " << c.k << "\n\n"
        << "[dataset]\nn_shot = " << c.n_shot << "\nseeds = " << list(c.seeds, false) << "\n\n"
        << "[mia]\ncapacity = " << c.capacity << "\n\n"
        << "[engine]\nconcurrency = " << c.concurrency << "\n\n"
        << "[backend]\n"
        << "kind = " << quoted(c.backend.kind) << '\n'
        << "endpoint = " << quoted(c.backend.endpoint) << '\n'
        << "model = " << quoted(c.backend.model) << '\n'
        << "fixtures = " << quoted(c.backend.fixtures.string()) << '\n'
        << "persona = " << quoted(c.backend.persona) << '\n'
        << "markers = " << list(c.backend.markers, true) << '\n'
        << "temperature = " << real(c.temperature) << '\n'
        << "max_retries = " << c.backend.max_retries << '\n'
        << "initial_backoff_ms = " << c.backend.initial_backoff_ms << '\n'
        << "timeout_s = " << c.backend.timeout_s << '\n'
        << "cache = " << (c.backend.cache ? "true" : "false") << '\n';
    return out.str();
}

std::string config_hash(const RunConfig& c) {
    // Input files are keyed by content, not location.
    auto content_tag = [](const std::filesystem::path& p) {
        LmmRequest r;
        r.prompt = std::filesystem::exists(p) ? io::read_file(p) : p.string();
        return fingerprint(r);
    };
    io::Json j = {{"train", content_tag(c.train_manifest)},
                  {"test", content_tag(c.test_manifest)},
                  {"embeddings", content_tag(c.embeddings)},
                  {"fixtures", c.backend.fixtures.empty() ? "" : content_tag(c.backend.fixtures)},
                  {"alpha", c.alpha},
                  {"beta", c.beta},
                  {"k", c.k},
                  {"n_shot", c.n_shot},
                  {"capacity", c.capacity},
                  {"seeds", c.seeds},
                  {"temperature", c.temperature},
                  {"backend_kind", c.backend.kind},
                  {"endpoint", c.backend.endpoint},
                  {"model", c.backend.model},
                  {"persona", c.backend.persona},
                  {"markers", c.backend.markers}};
    LmmRequest r;
    r.prompt = j.dump();
    return fingerprint(r).substr(0, 12);
}

} // namespace lorehm
