#include "lorehm/embedding_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "lorehm/error.hpp"
#include "lorehm/io.hpp"

namespace lorehm {

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double squared_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) {
        sum += x * x;
    }
    return sum;
}

} // namespace

FusedEmbedding fuse(const ModalityEmbeddings& m, double alpha, double beta) {
    if (!std::isfinite(alpha) || !std::isfinite(beta)) {
        throw Error("fusion weights must be finite");
    }
    if (m.visual.size() != m.textual.size()) {
        throw Error("embedding \"" + m.id + "\": visual dim " + std::to_string(m.visual.size()) +
                    " != textual dim " + std::to_string(m.textual.size()));
    }
    if (m.visual.empty()) {
        throw Error("embedding \"" + m.id + "\": empty vectors");
    }
    FusedEmbedding out{m.id, std::vector<double>(m.visual.size()), alpha, beta};
    for (std::size_t i = 0; i < m.visual.size(); ++i) {
        out.vector[i] = alpha * m.visual[i] + beta * m.textual[i];
    }
    if (!all_finite(out.vector)) {
        throw Error("embedding \"" + m.id + "\": non-finite fused component");
    }
    return out;
}

double similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error("similarity: dimension mismatch " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
    }
    const double na2 = squared_norm(a);
    const double nb2 = squared_norm(b);
    if (na2 == 0.0 || nb2 == 0.0) {
        throw Error("similarity: cosine undefined for a zero vector");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
    }
    // sqrt(na2 * nb2) rather than |a| * |b|: for b = +-a this is exactly |dot|.
    const double cosine = std::clamp(dot / std::sqrt(na2 * nb2), -1.0, 1.0);
    return (cosine + 1.0) / 2.0;
}

double similarity(const FusedEmbedding& a, const FusedEmbedding& b) {
    return similarity(a.vector, b.vector);
}

EmbeddingIndex::EmbeddingIndex(std::vector<FusedEmbedding> entries)
    : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        if (i == 0) {
            dim_ = e.vector.size();
        }
        if (e.vector.size() != dim_ || dim_ == 0) {
            throw Error("embedding index: entry \"" + e.id + "\" has dim " +
                        std::to_string(e.vector.size()) + ", expected " + std::to_string(dim_));
        }
        if (!all_finite(e.vector) || squared_norm(e.vector) == 0.0) {
            throw Error("embedding index: entry \"" + e.id + "\" is zero or non-finite");
        }
        if (!positions_.emplace(e.id, i).second) {
            throw Error("embedding index: duplicate id \"" + e.id + "\"");
        }
    }
}

const FusedEmbedding& EmbeddingIndex::at(const MemeId& id) const {
    auto it = positions_.find(id);
    if (it == positions_.end()) {
        throw Error("no embedding for meme \"" + id + "\"");
    }
    return entries_[it->second];
}

RetrievedSet retrieve_top_k(const EmbeddingIndex& index, const FusedEmbedding& target,
                            const std::map<MemeId, HarmLabel>& labels, std::size_t k) {
    if (k % 2 == 0) {
        throw Error("k must be odd, got " + std::to_string(k));
    }
    std::vector<Neighbor> scored;
    scored.reserve(index.size());
    for (const auto& entry : index.entries()) {
        if (entry.id == target.id) {
            continue;
        }
        auto label = labels.find(entry.id);
        if (label == labels.end()) {
            throw Error("retrieve: no label for reference meme \"" + entry.id + "\"");
        }
        scored.push_back({entry.id, similarity(entry, target), label->second});
    }
    if (k > scored.size()) {
        throw Error("k = " + std::to_string(k) + " exceeds the " + std::to_string(scored.size()) +
                    " candidates in the index");
    }
    auto better = [](const Neighbor& a, const Neighbor& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.id < b.id;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    scored.resize(k);
    return {target.id, std::move(scored)};
}

EmbeddingFile parse_embeddings(std::istream& in, std::string_view source) {
    EmbeddingFile file;
    std::unordered_set<std::string> seen;
    std::size_t dim = 0;
    io::for_each_json_line(in, source, [&](std::size_t line_no, const io::Json& row) {
        const auto where = std::string(source) + ": line " + std::to_string(line_no) + ": ";
        if (!row.is_object()) {
            throw Error(where + "expected a JSON object");
        }
        if (auto meta = row.find("_meta"); meta != row.end()) {
            if (line_no != 1 || file.meta || !file.rows.empty()) {
                throw Error(where + "_meta header must be the first line");
            }
            EmbeddingFileMeta m;
            m.encoder = meta->value("encoder", std::string{});
            m.dim = meta->value("dim", std::size_t{0});
            m.normalized = meta->value("normalized", false);
            dim = m.dim;
            file.meta = std::move(m);
            return;
        }
        ModalityEmbeddings e;
        try {
            e.id = row.at("id").get<std::string>();
            e.visual = row.at("visual").get<std::vector<double>>();
            e.textual = row.at("textual").get<std::vector<double>>();
        } catch (const io::Json::exception& ex) {
            throw Error(where + "bad embedding row (" + ex.what() + ")");
        }
        if (e.id.empty()) {
            throw Error(where + "empty id");
        }
        if (e.visual.empty() || e.visual.size() != e.textual.size()) {
            throw Error(where + "visual/textual dims differ or are empty");
        }
        if (dim == 0) {
            dim = e.visual.size();
        } else if (e.visual.size() != dim) {
            throw Error(where + "dim " + std::to_string(e.visual.size()) + " != " +
                        std::to_string(dim));
        }
        if (!all_finite(e.visual) || !all_finite(e.textual)) {
            throw Error(where + "non-finite component");
        }
        if (!seen.insert(e.id).second) {
            throw Error(where + "duplicate id \"" + e.id + "\"");
        }
        file.rows.push_back(std::move(e));
    });
    return file;
}

EmbeddingFile load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open embeddings " + path.string());
    }
    return parse_embeddings(in, path.string());
}

void write_embeddings(std::ostream& out, const EmbeddingFile& file) {
    if (file.meta) {
        io::Json meta = {{"encoder", file.meta->encoder},
                         {"dim", file.meta->dim},
                         {"normalized", file.meta->normalized}};
        out << io::dump_line(io::Json{{"_meta", meta}}) << '\n';
    }
    for (const auto& e : file.rows) {
        out << io::dump_line({{"id", e.id}, {"visual", e.visual}, {"textual", e.textual}}) << '\n';
    }
}

} // namespace lorehm
