#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lorehm/embedding_index.hpp"
#include "lorehm/ledger.hpp"
#include "lorehm/rsa.hpp"

namespace lorehm {

inline constexpr std::size_t kDefaultShots = 50;
inline constexpr double kDefaultTemperature = 0.0;
inline constexpr std::size_t kDefaultConcurrency = 4;
inline const std::vector<std::uint64_t> kDefaultSeeds{1, 2, 3, 4, 5};

struct BackendConfig {
    std::string kind = "mock"; // remote | mock | oracle
    std::string endpoint;
    std::string model = "gpt-4o-2024-05-13";
    std::filesystem::path fixtures;
    std::string persona = "oracle";
    std::vector<std::string> markers{"##H##"};
    std::string api_key;
    int max_retries = 3;
    int initial_backoff_ms = 500;
    int timeout_s = 120;
    bool cache = true;
};

struct RunConfig {
    std::filesystem::path train_manifest;
    std::filesystem::path test_manifest;
    std::filesystem::path embeddings;
    std::filesystem::path run_dir = "runs";
    double alpha = kDefaultVisualWeight;
    double beta = kDefaultTextualWeight;
    std::size_t k = kDefaultNeighbors;
    std::size_t n_shot = kDefaultShots;
    std::size_t capacity = kDefaultInsightCapacity;
    std::vector<std::uint64_t> seeds = kDefaultSeeds;
    double temperature = kDefaultTemperature;
    std::size_t concurrency = kDefaultConcurrency;
    BackendConfig backend;

    // Throws ConfigError naming the first invalid field.
    void validate() const;
};

// Flat sectioned key = value file ([paths], [embedding], [rsa], [dataset],
// [mia], [backend], [engine]). Relative paths resolve against the config
// file's directory. Unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);

// LOREHM_API_KEY and LOREHM_ENDPOINT override the file.
void apply_environment(RunConfig& config);

std::string render_config(const RunConfig& config);

// Hash over every setting that affects outputs; names the run directory.
std::string config_hash(const RunConfig& config);

} // namespace lorehm
