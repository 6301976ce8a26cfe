#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lorehm/backend.hpp"
#include "lorehm/dataset.hpp"
#include "lorehm/ledger.hpp"

namespace lorehm {

// Request settings shared by every LMM call in a run.
struct RequestContext {
    LmmParams params;
    // Directory that relative image paths are resolved against.
    std::filesystem::path image_root;
    bool attach_images = true;
};

LmmRequest make_request(const RequestContext& ctx, std::string_view template_id, std::string prompt,
                        const MemeSample* meme);

struct GatherOptions {
    std::size_t concurrency = 1;
    // Trajectories already persisted by an interrupted run, matched by meme id.
    std::vector<Trajectory> completed;
    // Invoked once per newly judged meme, serialized, in completion order.
    std::function<void(const Trajectory&)> on_trajectory;
};

// One zero-shot judgment per reference meme, returned in reference order.
std::vector<Trajectory> gather_experience(const ReferenceSet& ref_set, LmmBackend& backend,
                                          const RequestContext& ctx, const GatherOptions& options = {});

struct ReflectSet {
    std::vector<Trajectory> trajectories;
};

ReflectSet build_reflect_set(std::span<const Trajectory> trajectories);

struct Proposal {
    std::vector<Operation> operations;
    std::string raw;
    std::size_t skipped_lines = 0;
    std::size_t suppressed_adds = 0;
};

// Reflection requests are text-only; the failed meme's image is not attached.
Proposal propose_operations(const Trajectory& traj, const InsightSet& insights, LmmBackend& backend,
                            const RequestContext& ctx);

// State of the ledger after reflecting on reflect-set entry `iteration`
// (1-based); iteration 0 is the empty starting set.
struct LedgerSnapshot {
    std::size_t iteration = 0;
    MemeId meme_id;
    std::string raw;
    std::vector<Operation> operations;
    std::size_t skipped_lines = 0;
    std::size_t suppressed_adds = 0;
    OperationTally tally;
    InsightSet insights;
};

nlohmann::json to_json(const LedgerSnapshot& snapshot);
LedgerSnapshot snapshot_from_json(const nlohmann::json& j);

struct ExtractOptions {
    std::size_t capacity = kDefaultInsightCapacity;
    std::optional<LedgerSnapshot> resume_from;
    std::function<void(const LedgerSnapshot&)> on_snapshot;
};

// E_0 = {}; E_i = apply(E_{i-1}, propose(traj_i, E_{i-1})). Strictly sequential.
InsightSet extract_insights(const ReflectSet& reflect_set, LmmBackend& backend,
                            const RequestContext& ctx, const ExtractOptions& options = {});

} // namespace lorehm
