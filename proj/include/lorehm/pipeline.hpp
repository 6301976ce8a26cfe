#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "lorehm/backend.hpp"
#include "lorehm/config.hpp"
#include "lorehm/dataset.hpp"
#include "lorehm/embedding_index.hpp"
#include "lorehm/evaluation.hpp"
#include "lorehm/mia.hpp"

namespace lorehm {

// Backend stack for a config: base backend, then the response cache (when
// enabled) under `run_root`, then the concurrency limiter.
std::shared_ptr<LmmBackend> make_backend(const RunConfig& config,
                                         const std::filesystem::path& run_root);

struct SeedOutcome {
    std::uint64_t seed = 0;
    std::size_t reflect_size = 0;
    std::size_t insight_count = 0;
    std::size_t predictions = 0;
    std::optional<EvalReport> report;
    std::optional<EvalReport> vote_only;
};

struct RunSummary {
    std::string config_hash;
    std::vector<SeedOutcome> seeds;
    std::optional<double> mean_accuracy;
    std::optional<double> mean_macro_f1;
    std::optional<double> mean_vote_only_accuracy;
    std::optional<double> mean_vote_only_macro_f1;
};

nlohmann::json to_json(const SeedOutcome& s);
nlohmann::json to_json(const RunSummary& s);

// End-to-end runner. Every stage persists its output under
// <run_dir>/<config hash>/<seed>/ and is reloaded instead of recomputed when
// present, so interrupted runs resume and single stages can be rerun.
class Pipeline {
public:
    explicit Pipeline(RunConfig config, std::shared_ptr<LmmBackend> backend = nullptr);

    const RunConfig& config() const noexcept { return config_; }
    const std::string& hash() const noexcept { return hash_; }
    std::filesystem::path run_root() const;
    std::filesystem::path seed_dir(std::uint64_t seed) const;
    LmmBackend& backend() { return *backend_; }

    const std::vector<MemeSample>& pool();
    const std::vector<MemeSample>& test_set();
    const FusedEmbedding& embedding(const MemeId& id);

    ReferenceSet reference_set(std::uint64_t seed);
    std::vector<Trajectory> trajectories(std::uint64_t seed);
    ReflectSet reflect_set(std::uint64_t seed);
    InsightSet insights(std::uint64_t seed);

    RetrievedSet retrieve(std::uint64_t seed, const MemeId& id);
    PreliminaryPrediction preliminary(std::uint64_t seed, const MemeId& id);
    Prediction predict(std::uint64_t seed, const MemeId& id);
    std::vector<Prediction> predictions(std::uint64_t seed);

    // Scores persisted predictions; nullopt outcome fields when the test
    // manifest is unlabeled.
    SeedOutcome evaluate_seed(std::uint64_t seed);

    RunSummary run();

private:
    void ensure_inputs();
    const MemeSample& find_meme(const MemeId& id);
    const EmbeddingIndex& reference_index(std::uint64_t seed);
    void write_run_metadata();

    RunConfig config_;
    std::string hash_;
    std::shared_ptr<LmmBackend> backend_;
    RequestContext ctx_;
    bool loaded_ = false;
    std::vector<MemeSample> pool_;
    std::vector<MemeSample> test_;
    std::map<MemeId, FusedEmbedding> fused_;
    std::map<std::uint64_t, EmbeddingIndex> indices_;
    std::map<std::uint64_t, std::map<MemeId, HarmLabel>> reference_labels_;
};

} // namespace lorehm
