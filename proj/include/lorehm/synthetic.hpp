#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lorehm/dataset.hpp"
#include "lorehm/embedding_index.hpp"

namespace lorehm {

struct SyntheticOptions {
    std::size_t pool_per_class = 100;
    std::size_t test_per_class = 30;
    std::size_t dim = 16;
    std::uint64_t seed = 7;
    std::string marker = "##H##";
    // Harmful memes whose text carries no marker; the oracle misjudges them.
    double implicit_fraction = 0.2;
    // Memes whose embeddings are drawn from the other class's cluster.
    double crossover_fraction = 0.15;
    double noise = 0.35;
};

struct SyntheticCorpus {
    std::vector<MemeSample> pool;
    std::vector<MemeSample> test;
    EmbeddingFile embeddings;
};

SyntheticCorpus generate_synthetic(const SyntheticOptions& options = {});

// Writes train.jsonl, test.jsonl, embeddings.jsonl, placeholder images and a
// ready-to-run config.toml (mock backend, oracle persona) into `dir`.
void write_synthetic(const SyntheticCorpus& corpus, const SyntheticOptions& options,
                     const std::filesystem::path& dir);

} // namespace lorehm
