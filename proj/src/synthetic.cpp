#include "lorehm/synthetic.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "lorehm/config.hpp"
#include "lorehm/error.hpp"
#include "lorehm/io.hpp"
#include "lorehm/prng.hpp"

namespace lorehm {

namespace {

constexpr std::array kSubjects{"the senator", "my landlord", "this vaccine", "the new phone",
                               "our cat", "the referee", "a tech billionaire", "monday morning",
                               "the group chat", "my code review"};
constexpr std::array kPredicates{"strikes again", "explained in one picture", "is at it again",
                                 "when nobody asked", "before and after", "vs expectations",
                                 "has entered the chat", "in a nutshell"};

// 1x1 transparent PNG.
constexpr std::array<unsigned char, 67> kPlaceholderPng{
    0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A, 0x00, 0x00, 0x00, 0x0D, 0x49, 0x48,
    0x44, 0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x06, 0x00, 0x00,
    0x00, 0x1F, 0x15, 0xC4, 0x89, 0x00, 0x00, 0x00, 0x0A, 0x49, 0x44, 0x41, 0x54, 0x78,
    0x9C, 0x63, 0x00, 0x01, 0x00, 0x00, 0x05, 0x00, 0x01, 0x0D, 0x0A, 0x2D, 0xB4, 0x00,
    0x00, 0x00, 0x00, 0x49, 0x45, 0x4E, 0x44, 0xAE, 0x42, 0x60, 0x82};

std::vector<double> unit(std::vector<double> v) {
    double sum = 0.0;
    for (double x : v) {
        sum += x * x;
    }
    const double n = std::sqrt(sum);
    for (double& x : v) {
        x /= n;
    }
    return v;
}

std::vector<double> random_direction(SplitMix64& rng, std::size_t dim) {
    std::vector<double> v(dim);
    for (auto& x : v) {
        x = rng.normal();
    }
    return unit(std::move(v));
}

std::vector<double> jitter(SplitMix64& rng, const std::vector<double>& center, double noise) {
    std::vector<double> v(center.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = center[i] + noise * rng.normal();
    }
    return unit(std::move(v));
}

} // namespace

SyntheticCorpus generate_synthetic(const SyntheticOptions& o) {
    if (o.dim == 0 || o.pool_per_class == 0) {
        throw Error("synthetic corpus needs dim > 0 and a non-empty pool");
    }
    SplitMix64 rng(o.seed);
    const auto harmful_center = random_direction(rng, o.dim);
    const auto harmless_center = random_direction(rng, o.dim);

    SyntheticCorpus corpus;
    corpus.embeddings.meta = EmbeddingFileMeta{"synthetic-clusters", o.dim, true};

    auto make = [&](const std::string& prefix, std::size_t index, HarmLabel label) {
        MemeSample s;
        std::ostringstream id;
        id << prefix << std::setw(3) << std::setfill('0') << index;
        s.id = id.str();
        s.image_path = "images/" + s.id + ".png";
        s.label = label;
        s.text = std::string(kSubjects[rng.below(kSubjects.size())]) + " " +
                 kPredicates[rng.below(kPredicates.size())];
        const bool harmful = label == HarmLabel::harmful;
        if (harmful && rng.uniform() >= o.implicit_fraction) {
            s.text += " " + o.marker;
        }
        const bool crossover = rng.uniform() < o.crossover_fraction;
        const auto& center = (harmful != crossover) ? harmful_center : harmless_center;
        corpus.embeddings.rows.push_back(
            {s.id, jitter(rng, center, o.noise), jitter(rng, center, o.noise)});
        return s;
    };

    // Classes alternate in manifest order.
    for (std::size_t i = 0; i < 2 * o.pool_per_class; ++i) {
        corpus.pool.push_back(make("p", i, i % 2 == 0 ? HarmLabel::harmful : HarmLabel::harmless));
    }
    for (std::size_t i = 0; i < 2 * o.test_per_class; ++i) {
        corpus.test.push_back(make("t", i, i % 2 == 0 ? HarmLabel::harmful : HarmLabel::harmless));
    }
    return corpus;
}

void write_synthetic(const SyntheticCorpus& corpus, const SyntheticOptions& options,
                     const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "images");
    write_manifest(dir / "train.jsonl", corpus.pool);
    write_manifest(dir / "test.jsonl", corpus.test);
    std::ostringstream emb;
    write_embeddings(emb, corpus.embeddings);
    io::write_file_atomic(dir / "embeddings.jsonl", emb.str());

    const std::string png(reinterpret_cast<const char*>(kPlaceholderPng.data()),
                          kPlaceholderPng.size());
    for (const auto* set : {&corpus.pool, &corpus.test}) {
        for (const auto& s : *set) {
            io::write_file_atomic(dir / s.image_path, png);
        }
    }

    RunConfig config;
    config.train_manifest = "train.jsonl";
    config.test_manifest = "test.jsonl";
    config.embeddings = "embeddings.jsonl";
    config.run_dir = "runs";
    config.backend.kind = "mock";
    config.backend.persona = "oracle";
    config.backend.markers = {options.marker};
    io::write_file_atomic(dir / "config.toml", render_config(config));
}

} // namespace lorehm
