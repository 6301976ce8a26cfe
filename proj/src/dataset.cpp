#include "lorehm/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "lorehm/error.hpp"
#include "lorehm/io.hpp"
#include "lorehm/prng.hpp"

namespace lorehm {

std::optional<HarmLabel> label_from_string(std::string_view text) noexcept {
    if (text == "harmful") {
        return HarmLabel::harmful;
    }
    if (text == "harmless") {
        return HarmLabel::harmless;
    }
    return std::nullopt;
}

HarmLabel merge_harm_labels(std::string_view raw) {
    if (raw == "harmful" || raw == "very harmful" || raw == "partially harmful") {
        return HarmLabel::harmful;
    }
    if (raw == "harmless") {
        return HarmLabel::harmless;
    }
    throw Error("unknown label \"" + std::string(raw) + "\"");
}

namespace {

std::string line_prefix(std::string_view source, std::size_t line_no) {
    return std::string(source) + ": line " + std::to_string(line_no) + ": ";
}

const io::Json& require_string(const io::Json& row, const char* key, std::string_view source,
                               std::size_t line_no) {
    auto it = row.find(key);
    if (it == row.end() || !it->is_string()) {
        throw Error(line_prefix(source, line_no) + "missing string field \"" + key + "\"");
    }
    return *it;
}

std::vector<MemeSample> parse_rows(std::istream& in, std::string_view source) {
    std::vector<MemeSample> samples;
    std::unordered_map<std::string, std::size_t> first_seen;
    io::for_each_json_line(in, source, [&](std::size_t line_no, const io::Json& row) {
        if (!row.is_object()) {
            throw Error(line_prefix(source, line_no) + "expected a JSON object");
        }
        MemeSample sample;
        sample.id = require_string(row, "id", source, line_no).get<std::string>();
        if (sample.id.empty()) {
            throw Error(line_prefix(source, line_no) + "empty id");
        }
        sample.image_path = require_string(row, "image", source, line_no).get<std::string>();
        sample.text = require_string(row, "text", source, line_no).get<std::string>();
        if (auto it = row.find("label"); it != row.end() && !it->is_null()) {
            if (!it->is_string()) {
                throw Error(line_prefix(source, line_no) + "label must be a string");
            }
            try {
                sample.label = merge_harm_labels(it->get<std::string>());
            } catch (const Error& e) {
                throw Error(line_prefix(source, line_no) + e.what());
            }
        }
        auto [pos, inserted] = first_seen.emplace(sample.id, line_no);
        if (!inserted) {
            throw Error(std::string(source) + ": duplicate id \"" + sample.id + "\" on lines " +
                        std::to_string(pos->second) + " and " + std::to_string(line_no));
        }
        samples.push_back(std::move(sample));
    });
    return samples;
}

} // namespace

std::vector<MemeSample> parse_manifest(std::istream& in) { return parse_rows(in, "manifest"); }

std::vector<MemeSample> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open manifest " + path.string());
    }
    return parse_rows(in, path.string());
}

void write_manifest(std::ostream& out, std::span<const MemeSample> samples) {
    for (const auto& s : samples) {
        io::Json row = {{"id", s.id}, {"image", s.image_path}, {"text", s.text}};
        if (s.label) {
            row["label"] = std::string(to_string(*s.label));
        }
        out << io::dump_line(row) << '\n';
    }
}

void write_manifest(const std::filesystem::path& path, std::span<const MemeSample> samples) {
    std::ostringstream out;
    write_manifest(out, samples);
    io::write_file_atomic(path, out.str());
}

std::filesystem::path resolve_image_path(const std::filesystem::path& manifest_path,
                                         const MemeSample& sample) {
    std::filesystem::path image(sample.image_path);
    if (image.is_absolute()) {
        return image;
    }
    return manifest_path.parent_path() / image;
}

LabelCounts count_labels(std::span<const MemeSample> samples) noexcept {
    LabelCounts counts;
    for (const auto& s : samples) {
        if (!s.label) {
            ++counts.unlabeled;
        } else if (*s.label == HarmLabel::harmful) {
            ++counts.harmful;
        } else {
            ++counts.harmless;
        }
    }
    return counts;
}

ReferenceSet sample_reference_set(std::span<const MemeSample> pool, std::size_t n,
                                  std::uint64_t seed) {
    if (n % 2 != 0) {
        throw Error("reference set size must be even, got " + std::to_string(n));
    }
    std::vector<const MemeSample*> harmful;
    std::vector<const MemeSample*> harmless;
    for (const auto& s : pool) {
        if (!s.label) {
            throw Error("reference pool contains unlabeled sample \"" + s.id + "\"");
        }
        (*s.label == HarmLabel::harmful ? harmful : harmless).push_back(&s);
    }
    const std::size_t per_class = n / 2;
    if (harmful.size() < per_class) {
        throw Error("insufficient harmful samples: need " + std::to_string(per_class) + ", pool has " +
                    std::to_string(harmful.size()));
    }
    if (harmless.size() < per_class) {
        throw Error("insufficient harmless samples: need " + std::to_string(per_class) +
                    ", pool has " + std::to_string(harmless.size()));
    }

    const SplitMix64 root(seed);
    auto take = [per_class](std::vector<const MemeSample*>& members, SplitMix64 rng) {
        // Partial Fisher-Yates: only the first per_class slots are needed.
        for (std::size_t i = 0; i < per_class; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(members.size() - i));
            std::swap(members[i], members[j]);
        }
        members.resize(per_class);
    };
    take(harmful, root.split(1));
    take(harmless, root.split(2));

    ReferenceSet out;
    out.seed = seed;
    out.n = n;
    out.samples.reserve(n);
    for (const auto* s : harmful) {
        out.samples.push_back(*s);
    }
    for (const auto* s : harmless) {
        out.samples.push_back(*s);
    }
    return out;
}

} // namespace lorehm
