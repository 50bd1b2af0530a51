#pragma once

#include "v2p/geometry.hpp"
#include "v2p/head.hpp"

#include <cstdint>
#include <vector>

namespace v2p {

enum class SizeClass : std::uint32_t { small = 0, medium = 1, large = 2 };

const char* size_class_name(SizeClass c);

/// Half-open side-length range [min_side, max_side) in pixels.
struct SizeRange {
    double min_side = 0.0;
    double max_side = 0.0;
};

/// Scene recipe. Size-class ranges must be ascending and disjoint so the
/// class is recoverable from the target area.
struct SynthConfig {
    std::uint32_t image_width = 128;
    std::uint32_t image_height = 128;
    std::uint32_t patch_size = 8;
    std::uint32_t elements_per_scene = 3;
    SizeRange small_range{10.0, 24.0};
    SizeRange medium_range{24.0, 48.0};
    SizeRange large_range{48.0, 88.0};
    std::uint32_t feature_dim = 16;
    std::uint32_t query_dim = 16;
    double sigma_noise = 0.05;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument when ranges overlap, elements cannot fit
    /// the image, or counts are zero.
    void validate() const;

    PatchGrid grid() const { return PatchGrid(image_width, image_height, patch_size); }
};

/// One training/eval unit: patch features, query embedding, ground truth.
struct GroundingSample {
    PatchGrid grid;
    PatchFeatures feats;
    QueryEmbedding query;
    BoundingBox target;
    std::vector<BoundingBox> distractors;
    SizeClass size_class = SizeClass::small;

    GroundingSample() : target(0.0, 0.0, 1.0, 1.0) {}
};

struct Corpus {
    SynthConfig config;
    std::vector<GroundingSample> samples;
};

/// Deterministic function of (config.seed, scene_index). Elements are
/// rejection-sampled to <= 30% pairwise IoU; element 0 is the target.
/// Identity vectors are mutually orthonormal within a scene (while
/// feature_dim allows); each patch accumulates every overlapping element's
/// identity scaled by the fraction of the patch the element covers, and
/// Gaussian noise (sigma_noise) is added everywhere. The query is the target
/// identity, zero-padded or truncated to query_dim, plus noise, so with
/// sigma_noise = 0 it correlates with the target identity and no other.
/// Throws NumericError after 1000 failed placement attempts for an element.
GroundingSample generate_scene(const SynthConfig& config, std::uint64_t scene_index);

/// Scenes 0..count-1. OpenMP-parallel per scene; scenes carry independent
/// RNG streams, so the result is bit-identical to the serial reference.
Corpus generate_corpus(const SynthConfig& config, std::uint64_t count);

/// Serial reference implementation, kept for tests and benchmarks.
Corpus generate_corpus_serial(const SynthConfig& config, std::uint64_t count);

} // namespace v2p
