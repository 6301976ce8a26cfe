#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lorehm/types.hpp"

namespace lorehm {

inline constexpr double kDefaultVisualWeight = 0.2;
inline constexpr double kDefaultTextualWeight = 0.8;

struct ModalityEmbeddings {
    MemeId id;
    std::vector<double> visual;
    std::vector<double> textual;
};

struct FusedEmbedding {
    MemeId id;
    std::vector<double> vector;
    double alpha = kDefaultVisualWeight;
    double beta = kDefaultTextualWeight;
};

struct Neighbor {
    MemeId id;
    double score = 0.0;
    std::optional<HarmLabel> label;
};

struct RetrievedSet {
    MemeId target_id;
    std::vector<Neighbor> neighbors;
};

// Header row written by the extractor ahead of the vectors.
struct EmbeddingFileMeta {
    std::string encoder;
    std::size_t dim = 0;
    bool normalized = false;
};

struct EmbeddingFile {
    std::optional<EmbeddingFileMeta> meta;
    std::vector<ModalityEmbeddings> rows;
};

// Emb = alpha * visual + beta * textual, componentwise.
FusedEmbedding fuse(const ModalityEmbeddings& m, double alpha = kDefaultVisualWeight,
                    double beta = kDefaultTextualWeight);

// Cosine similarity mapped affinely onto [0, 1]: (cos + 1) / 2.
double similarity(std::span<const double> a, std::span<const double> b);
double similarity(const FusedEmbedding& a, const FusedEmbedding& b);

// Immutable id-keyed collection of fused vectors sharing one dimension.
class EmbeddingIndex {
public:
    EmbeddingIndex() = default;
    explicit EmbeddingIndex(std::vector<FusedEmbedding> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    bool contains(const MemeId& id) const { return positions_.contains(id); }
    const FusedEmbedding& at(const MemeId& id) const;
    std::span<const FusedEmbedding> entries() const noexcept { return entries_; }

private:
    std::vector<FusedEmbedding> entries_;
    std::unordered_map<MemeId, std::size_t> positions_;
    std::size_t dim_ = 0;
};

// Top-k by score, ties broken by ascending id. An index entry with the same id
// as the target is never returned.
RetrievedSet retrieve_top_k(const EmbeddingIndex& index, const FusedEmbedding& target,
                            const std::map<MemeId, HarmLabel>& labels, std::size_t k);

EmbeddingFile parse_embeddings(std::istream& in, std::string_view source = "embeddings");
EmbeddingFile load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingFile& file);

} // namespace lorehm
