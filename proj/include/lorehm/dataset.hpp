#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "lorehm/types.hpp"

namespace lorehm {

struct ReferenceSet {
    std::vector<MemeSample> samples;
    std::uint64_t seed = 0;
    std::size_t n = 0;
};

struct LabelCounts {
    std::size_t harmful = 0;
    std::size_t harmless = 0;
    std::size_t unlabeled = 0;

    bool operator==(const LabelCounts&) const = default;
};

// Maps raw dataset labels onto the binary scheme. The three-way HarM
// annotation collapses "very harmful" and "partially harmful" into harmful.
HarmLabel merge_harm_labels(std::string_view raw);

// Reads a JSONL manifest: {"id", "image", "text", "label"?}. The label may be
// absent or null for prediction-only test manifests.
std::vector<MemeSample> load_manifest(const std::filesystem::path& path);
std::vector<MemeSample> parse_manifest(std::istream& in);

void write_manifest(std::ostream& out, std::span<const MemeSample> samples);
void write_manifest(const std::filesystem::path& path, std::span<const MemeSample> samples);

// Image paths in a manifest are relative to the manifest's directory.
std::filesystem::path resolve_image_path(const std::filesystem::path& manifest_path,
                                         const MemeSample& sample);

LabelCounts count_labels(std::span<const MemeSample> samples) noexcept;

// Balanced, seeded sampling without replacement: each class is shuffled with
// its own SplitMix64 stream, the first n/2 of each are taken, harmful first.
ReferenceSet sample_reference_set(std::span<const MemeSample> pool, std::size_t n,
                                  std::uint64_t seed);

} // namespace lorehm
