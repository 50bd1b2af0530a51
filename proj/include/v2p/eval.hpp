#pragma once

#include "v2p/geometry.hpp"
#include "v2p/head.hpp"
#include "v2p/synth.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace v2p {

enum class DecodeMode { argmax, threshold_centroid };

const char* decode_mode_name(DecodeMode m);
DecodeMode parse_decode_mode(const std::string& name);

/// Click point from an attention map.
///   argmax: center of the highest-probability patch (ties -> lowest
///           row-major index); gamma is ignored.
///   threshold_centroid: attention-weighted centroid of the centers of all
///           patches with probs_i >= gamma * max_j probs_j.
/// Throws std::invalid_argument for gamma outside (0,1] in threshold mode.
Point decode_click(const AttentionMap& attn, DecodeMode mode, double gamma = 0.8);

/// Fraction of predictions inside their target box (boundary inclusive).
/// Throws std::invalid_argument on length mismatch.
double element_accuracy(const std::vector<Point>& predictions,
                        const std::vector<BoundingBox>& targets);

/// One evaluation unit: target plus optional stratification tags.
struct EvalSample {
    BoundingBox target;
    std::optional<SizeClass> size_class; // absent -> derive from area terciles
    std::optional<std::string> category;

    explicit EvalSample(const BoundingBox& target) : target(target) {}
};

struct EvalReport {
    double overall = 0.0;
    std::size_t sample_count = 0;
    // Classes with no samples are absent, not zero.
    std::map<std::string, double> per_size_class;
    std::map<std::string, std::size_t> size_class_counts;
    std::map<std::string, double> per_category;
    std::map<std::string, std::size_t> category_counts;
    DecodeMode mode = DecodeMode::argmax;
    double gamma = 0.0;
};

/// Size classes come from the samples when present; otherwise from area
/// terciles computed over this evaluation set (rank-based: the lowest third
/// of areas is small, the middle third medium, the top third large).
EvalReport size_stratified_report(const std::vector<EvalSample>& samples,
                                  const std::vector<Point>& predictions,
                                  DecodeMode mode = DecodeMode::argmax,
                                  double gamma = 0.0);

/// Rank-based tercile classes for a set of areas (ties resolved by input
/// order). Exposed for the real-data path where size classes are not given.
std::vector<SizeClass> area_terciles(const std::vector<double>& areas);

} // namespace v2p
