#pragma once

#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace testing_support {

// mkdtemp-backed scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "lorehm-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace testing_support

#include <functional>
#include <mutex>

#include "lorehm/backend.hpp"

namespace testing_support {

// Backend whose replies come from a callable; records every request.
class ScriptedBackend final : public lorehm::LmmBackend {
public:
    using Script = std::function<std::string(const lorehm::LmmRequest&)>;
    explicit ScriptedBackend(Script script) : script_(std::move(script)) {}
    lorehm::LmmResponse complete(const lorehm::LmmRequest& request) override {
        std::lock_guard lock(mutex_);
        requests.push_back(request);
        return {script_(request), 0, "scripted"};
    }
    std::string id() const override { return "scripted"; }
    std::vector<lorehm::LmmRequest> requests;

private:
    Script script_;
    std::mutex mutex_;
};

} // namespace testing_support

#include "lorehm/config.hpp"
#include "lorehm/synthetic.hpp"

namespace testing_support {

// Writes the default synthetic corpus into `dir` and returns its config with
// the run directory pointed at `dir / run_subdir`.
inline lorehm::RunConfig synthetic_config(const std::filesystem::path& dir, const std::string& persona,
                                          const std::string& run_subdir = "runs",
                                          lorehm::SyntheticOptions options = {}) {
    lorehm::write_synthetic(lorehm::generate_synthetic(options), options, dir);
    auto config = lorehm::load_config(dir / "config.toml");
    config.backend.persona = persona;
    config.run_dir = dir / run_subdir;
    return config;
}

} // namespace testing_support
