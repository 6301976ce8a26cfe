#include "lorehm/cli.hpp"

#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "lorehm/error.hpp"
#include "lorehm/io.hpp"
#include "lorehm/pipeline.hpp"
#include "lorehm/synthetic.hpp"

namespace lorehm::cli {

namespace {

struct Options {
    std::string config_path;
    std::string backend;
    std::string persona;
    std::string run_dir;
    std::optional<std::uint64_t> seed;
    bool no_cache = false;
    std::string meme_id;
    std::string manifest;
    std::string out_dir;
    SyntheticOptions synthetic;
};

void error_record(std::ostream& err, std::string_view kind, std::string_view message,
                  std::string_view field = {}) {
    io::Json e = {{"kind", kind}, {"message", message}};
    if (!field.empty()) {
        e["field"] = field;
    }
    err << io::dump_line({{"error", e}}) << '\n';
}

io::Json counts_json(const LabelCounts& c) {
    return {{"harmful", c.harmful}, {"harmless", c.harmless}, {"unlabeled", c.unlabeled}};
}

RunConfig build_config(const Options& o) {
    if (o.config_path.empty()) {
        throw ConfigError("--config", "--config is required for this command");
    }
    auto config = load_config(o.config_path);
    apply_environment(config);
    if (!o.backend.empty()) {
        config.backend.kind = o.backend;
    }
    if (!o.persona.empty()) {
        config.backend.persona = o.persona;
    }
    if (!o.run_dir.empty()) {
        config.run_dir = o.run_dir;
    }
    if (o.no_cache) {
        config.backend.cache = false;
    }
    config.validate();
    return config;
}

std::uint64_t pick_seed(const Options& o, const RunConfig& config) {
    return o.seed.value_or(config.seeds.front());
}

io::Json retrieved_json(const RetrievedSet& r) {
    auto neighbors = io::Json::array();
    for (const auto& n : r.neighbors) {
        neighbors.push_back({{"id", n.id},
                             {"score", n.score},
                             {"label", n.label ? io::Json(to_string(*n.label)) : io::Json()}});
    }
    return {{"target_id", r.target_id}, {"neighbors", std::move(neighbors)}};
}

io::Json vote_json(const PreliminaryPrediction& p) {
    return {{"target_id", p.target_id},
            {"value", to_string(p.value)},
            {"harmful_votes", p.harmful_votes},
            {"k", p.k}};
}

int cmd_ingest(const Options& o, std::ostream& out) {
    if (!o.manifest.empty()) {
        const auto samples = load_manifest(o.manifest);
        out << io::dump_line({{"manifest", o.manifest},
                              {"samples", samples.size()},
                              {"labels", counts_json(count_labels(samples))}})
            << '\n';
        return 0;
    }
    const auto config = build_config(o);
    const auto pool = load_manifest(config.train_manifest);
    const auto test = load_manifest(config.test_manifest);
    const auto emb = load_embeddings(config.embeddings);
    if (count_labels(pool).unlabeled > 0) {
        throw Error("train manifest contains unlabeled samples; reference pools must be labeled");
    }
    std::set<std::string> ids;
    for (const auto& r : emb.rows) {
        ids.insert(r.id);
    }
    auto missing = io::Json::array();
    for (const auto* set : {&pool, &test}) {
        for (const auto& s : *set) {
            if (!ids.contains(s.id)) {
                missing.push_back(s.id);
            }
        }
    }
    const std::size_t dim = emb.rows.empty() ? 0 : emb.rows.front().visual.size();
    if (emb.meta && emb.meta->dim != 0 && emb.meta->dim != dim) {
        throw Error("embeddings header declares dim " + std::to_string(emb.meta->dim) +
                    " but rows have dim " + std::to_string(dim));
    }
    out << io::dump_line(
               {{"train", {{"samples", pool.size()}, {"labels", counts_json(count_labels(pool))}}},
                {"test", {{"samples", test.size()}, {"labels", counts_json(count_labels(test))}}},
                {"embeddings",
                 {{"rows", emb.rows.size()},
                  {"dim", dim},
                  {"encoder", emb.meta ? emb.meta->encoder : ""},
                  {"normalized", emb.meta ? emb.meta->normalized : false}}},
                {"missing_embeddings", missing}})
        << '\n';
    if (!missing.empty()) {
        throw Error(std::to_string(missing.size()) + " memes have no embedding");
    }
    return 0;
}

int run_command(const std::string& name, const Options& o, std::ostream& out) {
    if (name == "gen-synthetic") {
        if (o.out_dir.empty()) {
            throw ConfigError("--out", "gen-synthetic needs --out <dir>");
        }
        const auto corpus = generate_synthetic(o.synthetic);
        write_synthetic(corpus, o.synthetic, o.out_dir);
        out << io::dump_line({{"out", o.out_dir},
                              {"train", corpus.pool.size()},
                              {"test", corpus.test.size()},
                              {"dim", o.synthetic.dim}})
            << '\n';
        return 0;
    }
    if (name == "ingest") {
        return cmd_ingest(o, out);
    }

    Pipeline pipeline(build_config(o));
    const auto seed = pick_seed(o, pipeline.config());
    if (name == "gather") {
        const auto trajs = pipeline.trajectories(seed);
        const auto reflect = build_reflect_set(trajs);
        std::size_t flagged = 0;
        for (const auto& t : trajs) {
            flagged += t.flagged ? 1 : 0;
        }
        out << io::dump_line({{"seed", seed},
                              {"trajectories", trajs.size()},
                              {"incorrect", reflect.trajectories.size()},
                              {"flagged", flagged},
                              {"path", (pipeline.seed_dir(seed) / "trajectories.jsonl").string()}})
            << '\n';
    } else if (name == "reflect") {
        out << io::dump_line(to_json(pipeline.insights(seed))) << '\n';
    } else if (name == "retrieve") {
        out << io::dump_line(retrieved_json(pipeline.retrieve(seed, o.meme_id))) << '\n';
    } else if (name == "vote") {
        out << io::dump_line(vote_json(pipeline.preliminary(seed, o.meme_id))) << '\n';
    } else if (name == "infer") {
        out << io::dump_line(to_json(pipeline.predict(seed, o.meme_id))) << '\n';
    } else if (name == "eval") {
        std::vector<std::uint64_t> seeds = o.seed ? std::vector{*o.seed} : pipeline.config().seeds;
        for (auto s : seeds) {
            out << io::dump_line(to_json(pipeline.evaluate_seed(s))) << '\n';
        }
    } else if (name == "run") {
        const auto summary = pipeline.run();
        auto j = to_json(summary);
        j["run_root"] = pipeline.run_root().string();
        out << io::dump_line(j) << '\n';
    }
    return 0;
}

} // namespace

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"lorehm: low-resource harmful meme detection pipeline"};
    app.name("lorehm");
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--config", o.config_path, "run configuration file");
    app.add_option("--backend", o.backend, "override backend.kind (remote|mock|oracle)");
    app.add_option("--persona", o.persona, "override backend.persona for the mock backend");
    app.add_option("--run-dir", o.run_dir, "override paths.run_dir");
    app.add_option("--seed", o.seed, "seed for single-stage commands (default: first seed)");
    app.add_flag("--no-cache", o.no_cache, "disable the response cache");

    app.add_subcommand("ingest", "validate manifests and embeddings")
        ->add_option("--manifest", o.manifest, "count labels in a single manifest");
    app.add_subcommand("gather", "sample the reference set and judge it zero-shot");
    app.add_subcommand("reflect", "extract the insight set from failed judgments");
    for (const char* name : {"retrieve", "vote", "infer"}) {
        app.add_subcommand(name, std::string(name) + " for one meme")
            ->add_option("meme-id", o.meme_id)
            ->required();
    }
    app.add_subcommand("eval", "score predictions per seed");
    app.add_subcommand("run", "full pipeline over every seed");
    auto* gen = app.add_subcommand("gen-synthetic", "write the synthetic fixture corpus");
    gen->add_option("--out", o.out_dir, "output directory")->required();
    gen->add_option("--corpus-seed", o.synthetic.seed, "generator seed");
    gen->add_option("--dim", o.synthetic.dim, "embedding dimension");
    gen->add_option("--pool-per-class", o.synthetic.pool_per_class);
    gen->add_option("--test-per-class", o.synthetic.test_per_class);

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << app.help();
        error_record(err, "usage", e.what());
        return 2;
    }

    const auto name = app.get_subcommands().front()->get_name();
    try {
        return run_command(name, o, out);
    } catch (const ConfigError& e) {
        error_record(err, "config", e.what(), e.field());
    } catch (const BackendError& e) {
        error_record(err, "backend", e.what());
    } catch (const std::exception& e) {
        error_record(err, "runtime", e.what());
    }
    return 1;
}

} // namespace lorehm::cli
