#include "lorehm/mia.hpp"

#include <mutex>
#include <unordered_map>

#include "lorehm/error.hpp"
#include "lorehm/parallel.hpp"
#include "lorehm/prompts.hpp"

namespace lorehm {

LmmRequest make_request(const RequestContext& ctx, std::string_view template_id, std::string prompt,
                        const MemeSample* meme) {
    LmmRequest request{std::string(template_id), std::move(prompt), std::nullopt, ctx.params};
    if (meme && ctx.attach_images && !meme->image_path.empty()) {
        std::filesystem::path image(meme->image_path);
        request.image_ref = (image.is_absolute() ? image : ctx.image_root / image).string();
    }
    return request;
}

std::vector<Trajectory> gather_experience(const ReferenceSet& ref_set, LmmBackend& backend,
                                          const RequestContext& ctx, const GatherOptions& options) {
    std::unordered_map<MemeId, const Trajectory*> done;
    for (const auto& t : options.completed) {
        done.emplace(t.meme_id, &t);
    }

    const auto& samples = ref_set.samples;
    std::vector<std::optional<Trajectory>> slots(samples.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].label) {
            throw Error("reference meme \"" + samples[i].id + "\" has no label");
        }
        if (auto it = done.find(samples[i].id); it != done.end()) {
            slots[i] = *it->second;
        } else {
            pending.push_back(i);
        }
    }

    std::mutex sink_mutex;
    parallel_for(pending.size(), options.concurrency, [&](std::size_t p) {
        const auto& meme = samples[pending[p]];
        auto request =
            make_request(ctx, prompts::kCotTemplateId, prompts::render_cot_prompt(meme), &meme);
        auto outcome = request_verdict(backend, request);
        Trajectory t{meme.id,         std::move(outcome.verdict.thought), outcome.verdict.answer,
                     *meme.label,     outcome.verdict.answer == *meme.label, outcome.flagged};
        std::lock_guard lock(sink_mutex);
        if (options.on_trajectory) {
            options.on_trajectory(t);
        }
        slots[pending[p]] = std::move(t);
    });

    std::vector<Trajectory> out;
    out.reserve(slots.size());
    for (auto& slot : slots) {
        out.push_back(std::move(*slot));
    }
    return out;
}

ReflectSet build_reflect_set(std::span<const Trajectory> trajectories) {
    ReflectSet out;
    for (const auto& t : trajectories) {
        if (!t.correct) {
            out.trajectories.push_back(t);
        }
    }
    return out;
}

Proposal propose_operations(const Trajectory& traj, const InsightSet& insights, LmmBackend& backend,
                            const RequestContext& ctx) {
    if (traj.correct) {
        throw Error("propose_operations: trajectory for \"" + traj.meme_id + "\" is not a failure");
    }
    auto request = make_request(ctx, prompts::kReflectTemplateId,
                                prompts::render_reflect_prompt(traj, insights), nullptr);
    auto response = backend.complete(request);
    auto parsed = parse_operations(response.text);

    Proposal out;
    out.raw = std::move(response.text);
    out.skipped_lines = parsed.skipped_lines;
    for (auto& op : parsed.operations) {
        if (op.kind == OperationKind::add && insights.full()) {
            ++out.suppressed_adds;
            continue;
        }
        out.operations.push_back(std::move(op));
    }
    return out;
}

nlohmann::json to_json(const LedgerSnapshot& s) {
    auto ops = nlohmann::json::array();
    for (const auto& op : s.operations) {
        ops.push_back(to_json(op));
    }
    return {{"iteration", s.iteration},
            {"meme_id", s.meme_id},
            {"raw", s.raw},
            {"operations", std::move(ops)},
            {"skipped_lines", s.skipped_lines},
            {"suppressed_adds", s.suppressed_adds},
            {"tally",
             {{"applied", s.tally.applied},
              {"out_of_range", s.tally.out_of_range},
              {"malformed", s.tally.malformed},
              {"rejected_adds", s.tally.rejected_adds}}},
            {"insights", to_json(s.insights)}};
}

namespace {

Operation operation_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    Operation op;
    if (kind == "ADD") {
        op.kind = OperationKind::add;
    } else if (kind == "UPVOTE") {
        op.kind = OperationKind::upvote;
    } else if (kind == "DOWNVOTE") {
        op.kind = OperationKind::downvote;
    } else if (kind == "EDIT") {
        op.kind = OperationKind::edit;
    } else {
        throw Error("unknown operation kind \"" + kind + "\"");
    }
    if (j.contains("index")) {
        op.target_index = j["index"].get<std::size_t>();
    }
    if (j.contains("text")) {
        op.text = j["text"].get<std::string>();
    }
    return op;
}

} // namespace

LedgerSnapshot snapshot_from_json(const nlohmann::json& j) {
    LedgerSnapshot s;
    s.iteration = j.at("iteration").get<std::size_t>();
    s.meme_id = j.at("meme_id").get<std::string>();
    s.raw = j.at("raw").get<std::string>();
    for (const auto& op : j.at("operations")) {
        s.operations.push_back(operation_from_json(op));
    }
    s.skipped_lines = j.at("skipped_lines").get<std::size_t>();
    s.suppressed_adds = j.at("suppressed_adds").get<std::size_t>();
    const auto& t = j.at("tally");
    s.tally = {t.at("applied").get<std::size_t>(), t.at("out_of_range").get<std::size_t>(),
               t.at("malformed").get<std::size_t>(), t.at("rejected_adds").get<std::size_t>()};
    s.insights = insight_set_from_json(j.at("insights"));
    return s;
}

InsightSet extract_insights(const ReflectSet& reflect_set, LmmBackend& backend,
                            const RequestContext& ctx, const ExtractOptions& options) {
    if (options.capacity < 1) {
        throw Error("insight capacity must be at least 1");
    }
    InsightSet current;
    current.capacity = options.capacity;
    std::size_t start = 0;
    if (options.resume_from) {
        start = options.resume_from->iteration;
        current = options.resume_from->insights;
        if (start > reflect_set.trajectories.size()) {
            throw Error("resume snapshot is past the end of the reflect set");
        }
    } else if (options.on_snapshot) {
        options.on_snapshot(LedgerSnapshot{0, {}, {}, {}, 0, 0, {}, current});
    }

    for (std::size_t i = start; i < reflect_set.trajectories.size(); ++i) {
        const auto& traj = reflect_set.trajectories[i];
        auto proposal = propose_operations(traj, current, backend, ctx);
        OperationTally tally;
        current = apply_operations(std::move(current), proposal.operations, &tally);
        if (options.on_snapshot) {
            options.on_snapshot(LedgerSnapshot{i + 1, traj.meme_id, std::move(proposal.raw),
                                               std::move(proposal.operations),
                                               proposal.skipped_lines, proposal.suppressed_adds,
                                               tally, current});
        }
    }
    return current;
}

} // namespace lorehm
