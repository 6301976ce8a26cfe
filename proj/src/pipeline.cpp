#include "lorehm/pipeline.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "lorehm/error.hpp"
#include "lorehm/io.hpp"
#include "lorehm/parallel.hpp"
#include "lorehm/prompts.hpp"

namespace lorehm {

namespace fs = std::filesystem;

namespace {

constexpr const char* kReferenceFile = "reference_set.jsonl";
constexpr const char* kTrajectoryFile = "trajectories.jsonl";
constexpr const char* kTrajectoryPartial = "trajectories.partial.jsonl";
constexpr const char* kInsightsFile = "insights.json";
constexpr const char* kInsightsLog = "insights_log.jsonl";
constexpr const char* kPredictionFile = "predictions.jsonl";
constexpr const char* kPredictionPartial = "predictions.partial.jsonl";
constexpr const char* kReportFile = "report.json";
constexpr const char* kSummaryFile = "summary.json";

std::string pretty(const io::Json& j) { return j.dump(2) + "\n"; }

template <typename T, typename ToJson>
std::string jsonl(const std::vector<T>& rows, ToJson to) {
    std::string out;
    for (const auto& r : rows) {
        out += io::dump_line(to(r));
        out += '\n';
    }
    return out;
}

std::optional<double> mean_of(const std::vector<SeedOutcome>& seeds,
                              double (*pick)(const SeedOutcome&), bool vote_only) {
    double sum = 0.0;
    for (const auto& s : seeds) {
        if (!(vote_only ? s.vote_only : s.report)) {
            return std::nullopt;
        }
        sum += pick(s);
    }
    return seeds.empty() ? std::nullopt : std::optional(sum / static_cast<double>(seeds.size()));
}

} // namespace

std::shared_ptr<LmmBackend> make_backend(const RunConfig& config, const fs::path& run_root) {
    std::shared_ptr<LmmBackend> base;
    const auto& b = config.backend;
    if (b.kind == "remote") {
        RemoteOptions options;
        options.endpoint = b.endpoint;
        options.api_key = b.api_key;
        options.max_retries = b.max_retries;
        options.initial_backoff = std::chrono::milliseconds(b.initial_backoff_ms);
        options.timeout = std::chrono::seconds(b.timeout_s);
        base = std::make_shared<RemoteBackend>(options);
    } else {
        MockOptions options;
        options.markers = b.markers;
        if (b.kind == "oracle") {
            options.persona = MockPersona::oracle;
        } else {
            options.persona = persona_from_string(b.persona).value_or(MockPersona::none);
            if (!b.fixtures.empty()) {
                options.fixtures = load_response_table(b.fixtures);
            }
        }
        base = std::make_shared<MockBackend>(std::move(options));
    }
    if (b.cache) {
        base = std::make_shared<CachingBackend>(base, run_root / "cache.jsonl");
    }
    return std::make_shared<LimitedBackend>(base, static_cast<std::ptrdiff_t>(config.concurrency));
}

nlohmann::json to_json(const SeedOutcome& s) {
    io::Json j = {{"seed", s.seed},
                  {"reflect_size", s.reflect_size},
                  {"insight_count", s.insight_count},
                  {"predictions", s.predictions}};
    j["report"] = s.report ? to_json(*s.report) : io::Json(nullptr);
    j["vote_only"] = s.vote_only ? to_json(*s.vote_only) : io::Json(nullptr);
    return j;
}

nlohmann::json to_json(const RunSummary& s) {
    auto seeds = io::Json::array();
    for (const auto& o : s.seeds) {
        seeds.push_back(to_json(o));
    }
    auto opt = [](const std::optional<double>& v) { return v ? io::Json(*v) : io::Json(nullptr); };
    return {{"config_hash", s.config_hash},
            {"seeds", std::move(seeds)},
            {"mean_accuracy", opt(s.mean_accuracy)},
            {"mean_macro_f1", opt(s.mean_macro_f1)},
            {"mean_vote_only_accuracy", opt(s.mean_vote_only_accuracy)},
            {"mean_vote_only_macro_f1", opt(s.mean_vote_only_macro_f1)}};
}

Pipeline::Pipeline(RunConfig config, std::shared_ptr<LmmBackend> backend)
    : config_(std::move(config)) {
    config_.validate();
    hash_ = config_hash(config_);
    backend_ = backend ? std::move(backend) : make_backend(config_, run_root());
    ctx_.params = {config_.temperature, config_.backend.model};
}

fs::path Pipeline::run_root() const { return config_.run_dir / hash_; }

fs::path Pipeline::seed_dir(std::uint64_t seed) const { return run_root() / std::to_string(seed); }

void Pipeline::ensure_inputs() {
    if (loaded_) {
        return;
    }
    auto load = [](const fs::path& manifest) {
        auto samples = load_manifest(manifest);
        for (auto& s : samples) {
            s.image_path = resolve_image_path(manifest, s).string();
        }
        return samples;
    };
    pool_ = load(config_.train_manifest);
    test_ = load(config_.test_manifest);

    const auto file = load_embeddings(config_.embeddings);
    for (const auto& row : file.rows) {
        fused_.emplace(row.id, fuse(row, config_.alpha, config_.beta));
    }
    for (const auto* set : {&pool_, &test_}) {
        for (const auto& s : *set) {
            if (!fused_.contains(s.id)) {
                throw Error("no embedding for meme \"" + s.id + "\" in " +
                            config_.embeddings.string());
            }
        }
    }
    loaded_ = true;
    write_run_metadata();
}

void Pipeline::write_run_metadata() {
    const auto path = run_root() / "metadata.json";
    if (fs::exists(path)) {
        return;
    }
    io::Json meta = {{"config_hash", hash_},
                     {"backend", backend_->id()},
                     {"templates",
                      {std::string(prompts::kCotTemplateId), std::string(prompts::kReflectTemplateId),
                       std::string(prompts::kFinalTemplateId)}},
                     {"reflection_attaches_image", false},
                     {"parse_fallback", "retry once with format reminder, then harmless + flagged"}};
    io::write_file_atomic(path, pretty(meta));
    io::write_file_atomic(run_root() / "config.toml", render_config(config_));
}

const std::vector<MemeSample>& Pipeline::pool() {
    ensure_inputs();
    return pool_;
}

const std::vector<MemeSample>& Pipeline::test_set() {
    ensure_inputs();
    return test_;
}

const FusedEmbedding& Pipeline::embedding(const MemeId& id) {
    ensure_inputs();
    auto it = fused_.find(id);
    if (it == fused_.end()) {
        throw Error("no embedding for meme \"" + id + "\"");
    }
    return it->second;
}

const MemeSample& Pipeline::find_meme(const MemeId& id) {
    ensure_inputs();
    for (const auto* set : {&test_, &pool_}) {
        for (const auto& s : *set) {
            if (s.id == id) {
                return s;
            }
        }
    }
    throw Error("unknown meme id \"" + id + "\"");
}

ReferenceSet Pipeline::reference_set(std::uint64_t seed) {
    ensure_inputs();
    const auto path = seed_dir(seed) / kReferenceFile;
    if (fs::exists(path)) {
        return {load_manifest(path), seed, config_.n_shot};
    }
    auto ref = sample_reference_set(pool_, config_.n_shot, seed);
    write_manifest(path, ref.samples);
    return ref;
}

std::vector<Trajectory> Pipeline::trajectories(std::uint64_t seed) {
    const auto dir = seed_dir(seed);
    const auto done = dir / kTrajectoryFile;
    auto read = [](const fs::path& p) {
        std::vector<Trajectory> out;
        io::for_each_json_line(p, [&](std::size_t, const io::Json& row) {
            out.push_back(trajectory_from_json(row));
        });
        return out;
    };
    if (fs::exists(done)) {
        return read(done);
    }
    const auto ref = reference_set(seed);
    const auto partial = dir / kTrajectoryPartial;
    GatherOptions options;
    options.concurrency = config_.concurrency;
    if (fs::exists(partial)) {
        options.completed = read(partial);
    }
    options.on_trajectory = [&](const Trajectory& t) {
        io::append_line(partial, io::dump_line(to_json(t)));
    };
    auto trajs = gather_experience(ref, *backend_, ctx_, options);
    io::write_file_atomic(done, jsonl(trajs, [](const Trajectory& t) { return to_json(t); }));
    fs::remove(partial);
    return trajs;
}

ReflectSet Pipeline::reflect_set(std::uint64_t seed) {
    return build_reflect_set(trajectories(seed));
}

InsightSet Pipeline::insights(std::uint64_t seed) {
    const auto dir = seed_dir(seed);
    const auto done = dir / kInsightsFile;
    if (fs::exists(done)) {
        return insight_set_from_json(io::Json::parse(io::read_file(done)));
    }
    const auto reflect = reflect_set(seed);
    const auto log = dir / kInsightsLog;
    ExtractOptions options;
    options.capacity = config_.capacity;
    if (fs::exists(log)) {
        io::for_each_json_line(log, [&](std::size_t, const io::Json& row) {
            options.resume_from = snapshot_from_json(row);
        });
    }
    options.on_snapshot = [&](const LedgerSnapshot& s) {
        io::append_line(log, io::dump_line(to_json(s)));
    };
    auto result = extract_insights(reflect, *backend_, ctx_, options);
    io::write_file_atomic(done, pretty(to_json(result)));
    return result;
}

const EmbeddingIndex& Pipeline::reference_index(std::uint64_t seed) {
    if (auto it = indices_.find(seed); it != indices_.end()) {
        return it->second;
    }
    const auto ref = reference_set(seed);
    std::vector<FusedEmbedding> entries;
    std::map<MemeId, HarmLabel> labels;
    for (const auto& s : ref.samples) {
        entries.push_back(embedding(s.id));
        labels.emplace(s.id, *s.label);
    }
    reference_labels_[seed] = std::move(labels);
    return indices_.emplace(seed, EmbeddingIndex(std::move(entries))).first->second;
}

RetrievedSet Pipeline::retrieve(std::uint64_t seed, const MemeId& id) {
    const auto& index = reference_index(seed);
    return retrieve_top_k(index, embedding(id), reference_labels_.at(seed), config_.k);
}

PreliminaryPrediction Pipeline::preliminary(std::uint64_t seed, const MemeId& id) {
    return vote(retrieve(seed, id));
}

Prediction Pipeline::predict(std::uint64_t seed, const MemeId& id) {
    const auto& meme = find_meme(id);
    const auto set = insights(seed);
    const auto retrieved = retrieve(seed, id);
    return infer(meme, retrieved, vote(retrieved), set, *backend_, ctx_);
}

std::vector<Prediction> Pipeline::predictions(std::uint64_t seed) {
    const auto dir = seed_dir(seed);
    const auto done = dir / kPredictionFile;
    auto read = [](const fs::path& p) {
        std::vector<Prediction> out;
        io::for_each_json_line(p, [&](std::size_t, const io::Json& row) {
            out.push_back(prediction_from_json(row));
        });
        return out;
    };
    if (fs::exists(done)) {
        return read(done);
    }
    ensure_inputs();
    const auto set = insights(seed);
    reference_index(seed);

    std::map<MemeId, Prediction> finished;
    const auto partial = dir / kPredictionPartial;
    if (fs::exists(partial)) {
        for (auto& p : read(partial)) {
            finished.emplace(p.meme_id, std::move(p));
        }
    }
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < test_.size(); ++i) {
        if (!finished.contains(test_[i].id)) {
            pending.push_back(i);
        }
    }
    std::vector<RetrievedSet> retrieved;
    for (auto i : pending) {
        retrieved.push_back(retrieve(seed, test_[i].id));
    }
    std::mutex mutex;
    parallel_for(pending.size(), config_.concurrency, [&](std::size_t p) {
        const auto& meme = test_[pending[p]];
        auto pred = infer(meme, retrieved[p], vote(retrieved[p]), set, *backend_, ctx_);
        std::lock_guard lock(mutex);
        io::append_line(partial, io::dump_line(to_json(pred)));
        finished.emplace(meme.id, std::move(pred));
    });

    std::vector<Prediction> ordered;
    ordered.reserve(test_.size());
    for (const auto& s : test_) {
        ordered.push_back(finished.at(s.id));
    }
    io::write_file_atomic(done, jsonl(ordered, [](const Prediction& p) { return to_json(p); }));
    fs::remove(partial);
    return ordered;
}

SeedOutcome Pipeline::evaluate_seed(std::uint64_t seed) {
    SeedOutcome out;
    out.seed = seed;
    const auto preds = predictions(seed);
    out.predictions = preds.size();
    out.reflect_size = reflect_set(seed).trajectories.size();
    out.insight_count = insights(seed).size();

    std::map<MemeId, HarmLabel> gold;
    for (const auto& s : test_set()) {
        if (!s.label) {
            return out;
        }
        gold.emplace(s.id, *s.label);
    }
    out.report = evaluate(preds, gold);
    out.report->seed = seed;
    out.vote_only = evaluate_prelim(preds, gold);
    out.vote_only->seed = seed;

    auto report = to_json(*out.report);
    report["vote_only"] = to_json(*out.vote_only);
    report["reflect_size"] = out.reflect_size;
    report["insight_count"] = out.insight_count;
    io::write_file_atomic(seed_dir(seed) / kReportFile, pretty(report));
    return out;
}

RunSummary Pipeline::run() {
    RunSummary summary;
    summary.config_hash = hash_;
    for (auto seed : config_.seeds) {
        summary.seeds.push_back(evaluate_seed(seed));
    }
    summary.mean_accuracy =
        mean_of(summary.seeds, [](const SeedOutcome& s) { return s.report->accuracy; }, false);
    summary.mean_macro_f1 =
        mean_of(summary.seeds, [](const SeedOutcome& s) { return s.report->macro_f1; }, false);
    summary.mean_vote_only_accuracy =
        mean_of(summary.seeds, [](const SeedOutcome& s) { return s.vote_only->accuracy; }, true);
    summary.mean_vote_only_macro_f1 =
        mean_of(summary.seeds, [](const SeedOutcome& s) { return s.vote_only->macro_f1; }, true);
    io::write_file_atomic(run_root() / kSummaryFile, pretty(to_json(summary)));
    return summary;
}

} // namespace lorehm
