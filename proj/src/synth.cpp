#include "v2p/synth.hpp"

#include "v2p/error.hpp"
#include "v2p/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

namespace v2p {

namespace {

constexpr double kMaxPairwiseIou = 0.30;
constexpr int kMaxPlacementAttempts = 1000;
constexpr std::uint64_t kSceneTag = 0x7363656e; // "scen"

const SizeRange& class_range(const SynthConfig& c, SizeClass cls) {
    switch (cls) {
        case SizeClass::small: return c.small_range;
        case SizeClass::medium: return c.medium_range;
        default: return c.large_range;
    }
}

/// Next identity vector for the scene: a unit vector orthogonal to every
/// identity drawn so far, while the feature dimension allows. Once the basis
/// is exhausted, plain unit draws. Redraws on (measure-zero) degeneracy.
std::vector<double> next_identity(Rng& rng, std::uint32_t dim,
                                  const std::vector<std::vector<double>>& prev) {
    std::vector<double> u(dim);
    for (;;) {
        for (double& x : u) x = rng.normal();
        if (prev.size() < dim) {
            for (const std::vector<double>& p : prev) {
                double dot = 0.0;
                for (std::uint32_t k = 0; k < dim; ++k) dot += u[k] * p[k];
                for (std::uint32_t k = 0; k < dim; ++k) u[k] -= dot * p[k];
            }
        }
        double norm_sq = 0.0;
        for (double x : u) norm_sq += x * x;
        if (norm_sq > 1e-18) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (double& x : u) x *= inv;
            return u;
        }
    }
}

} // namespace

const char* size_class_name(SizeClass c) {
    switch (c) {
        case SizeClass::small: return "small";
        case SizeClass::medium: return "medium";
        default: return "large";
    }
}

void SynthConfig::validate() const {
    if (elements_per_scene == 0) {
        throw std::invalid_argument("SynthConfig: elements_per_scene must be >= 1");
    }
    if (sigma_noise < 0.0) {
        throw std::invalid_argument("SynthConfig: sigma_noise must be >= 0");
    }
    if (feature_dim == 0 || query_dim == 0) {
        throw std::invalid_argument("SynthConfig: feature and query dims must be positive");
    }
    auto check_range = [](const SizeRange& r, const char* name) {
        if (!(r.min_side > 0.0 && r.max_side > r.min_side)) {
            throw std::invalid_argument(std::string("SynthConfig: bad ") + name + " range");
        }
    };
    check_range(small_range, "small");
    check_range(medium_range, "medium");
    check_range(large_range, "large");
    if (!(small_range.max_side <= medium_range.min_side &&
          medium_range.max_side <= large_range.min_side)) {
        throw std::invalid_argument("SynthConfig: size-class ranges must be ascending and disjoint");
    }
    if (large_range.max_side > image_width || large_range.max_side > image_height) {
        throw std::invalid_argument("SynthConfig: largest elements do not fit the image");
    }
    grid(); // validates image/patch dimensions
}

GroundingSample generate_scene(const SynthConfig& config, std::uint64_t scene_index) {
    config.validate();
    Rng rng(derive_seed(config.seed, splitmix64(kSceneTag) ^ scene_index));

    GroundingSample sample;
    sample.grid = config.grid();

    // Place elements; element 0 is the target.
    std::vector<BoundingBox> boxes;
    std::vector<std::vector<double>> identities;
    for (std::uint32_t e = 0; e < config.elements_per_scene; ++e) {
        const SizeClass cls = static_cast<SizeClass>(rng.uniform_index(3));
        const SizeRange& range = class_range(config, cls);
        bool placed = false;
        for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
            const double w = rng.uniform(range.min_side, range.max_side);
            const double h = rng.uniform(range.min_side, range.max_side);
            const double x1 = rng.uniform(0.0, config.image_width - w);
            const double y1 = rng.uniform(0.0, config.image_height - h);
            BoundingBox box(x1, y1, x1 + w, y1 + h);
            bool ok = true;
            for (const BoundingBox& other : boxes) {
                if (iou(box, other) > kMaxPairwiseIou) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                boxes.push_back(box);
                identities.push_back(next_identity(rng, config.feature_dim, identities));
                if (e == 0) sample.size_class = cls;
                placed = true;
            }
        }
        if (!placed) {
            throw NumericError("generate_scene: could not place element " + std::to_string(e) +
                               " after " + std::to_string(kMaxPlacementAttempts) +
                               " attempts; reduce elements_per_scene or element sizes");
        }
    }
    sample.target = boxes[0];
    sample.distractors.assign(boxes.begin() + 1, boxes.end());

    // Patch features: each overlapping element contributes its identity
    // scaled by the fraction of the patch it covers, plus isotropic noise
    // everywhere.
    const std::uint32_t m = sample.grid.patch_count();
    sample.feats = PatchFeatures(m, config.feature_dim);
    for (std::size_t e = 0; e < boxes.size(); ++e) {
        for (std::uint32_t i = 0; i < m; ++i) {
            const PatchRect region = patch_region(sample.grid, i);
            const double cover = overlap_area(region, boxes[e]) / region.area();
            if (cover > 0.0) {
                double* row = sample.feats.row(i);
                for (std::uint32_t k = 0; k < config.feature_dim; ++k) {
                    row[k] += cover * identities[e][k];
                }
            }
        }
    }
    for (std::uint32_t i = 0; i < m; ++i) {
        double* row = sample.feats.row(i);
        for (std::uint32_t k = 0; k < config.feature_dim; ++k) {
            row[k] += config.sigma_noise * rng.normal();
        }
    }

    // Query: the target identity itself (zero-padded or truncated to
    // query_dim), plus noise. In the noiseless limit the query matches the
    // target identity and, identities being orthonormal, no other element.
    sample.query.assign(config.query_dim, 0.0);
    const std::uint32_t copy_n = std::min(config.query_dim, config.feature_dim);
    for (std::uint32_t k = 0; k < copy_n; ++k) sample.query[k] = identities[0][k];
    for (std::uint32_t k = 0; k < config.query_dim; ++k) {
        sample.query[k] += config.sigma_noise * rng.normal();
    }
    return sample;
}

namespace {

Corpus generate_corpus_impl(const SynthConfig& config, std::uint64_t count, bool parallel) {
    config.validate();
    if (count == 0) {
        throw std::invalid_argument("generate_corpus: count must be >= 1");
    }
    Corpus corpus;
    corpus.config = config;
    corpus.samples.resize(count);
    const std::int64_t n = static_cast<std::int64_t>(count);
    if (parallel) {
        // exceptions must not escape the parallel region; capture per scene
        // and rethrow the lowest-index one, matching the serial path
        std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic, 8)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                corpus.samples[i] = generate_scene(config, static_cast<std::uint64_t>(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        for (const std::exception_ptr& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i) {
            corpus.samples[i] = generate_scene(config, static_cast<std::uint64_t>(i));
        }
    }
    return corpus;
}

} // namespace

Corpus generate_corpus(const SynthConfig& config, std::uint64_t count) {
    return generate_corpus_impl(config, count, true);
}

Corpus generate_corpus_serial(const SynthConfig& config, std::uint64_t count) {
    return generate_corpus_impl(config, count, false);
}

} // namespace v2p
