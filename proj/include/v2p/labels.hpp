#pragma once

#include "v2p/gaussian.hpp"
#include "v2p/geometry.hpp"

#include <cstdint>
#include <vector>

namespace v2p {

enum class LabelKind { gaussian, uniform };

/// Per-patch supervision target. For gaussian maps, values_i is the
/// normalized Gaussian mass y_i / (sum_j y_j + epsilon); for uniform maps it
/// is 1/K on the K patches whose center lies inside the box and 0 elsewhere.
struct LabelMap {
    PatchGrid grid;
    std::vector<double> values;
    LabelKind kind = LabelKind::gaussian;
    double epsilon = 0.0;

    double sum() const;
    /// Argmax over values; ties broken to the lowest row-major index.
    std::uint32_t peak_index() const;
};

/// Patch indices whose region has zero-area intersection with the
/// ground-truth box.
struct SuppressionSet {
    PatchGrid grid;
    std::vector<std::uint32_t> indices; // ascending
};

/// Integrate the Fitts-Gaussian prior over every patch and normalize by
/// (total mass + epsilon). OpenMP-parallel over patches; the normalizing sum
/// runs in index order, so results are identical to the serial reference.
/// Throws NumericError when every patch mass underflows to zero.
LabelMap gaussian_label_map(const PatchGrid& grid, const BoundingBox& b,
                            double sigma_factor, double epsilon = 1e-6);

/// Serial reference implementation, kept for tests and benchmarks.
LabelMap gaussian_label_map_serial(const PatchGrid& grid, const BoundingBox& b,
                                   double sigma_factor, double epsilon = 1e-6);

/// Per-patch share of a uniform map over K patches: the closest double to
/// 1/K. Throws std::invalid_argument for k = 0.
double uniform_share(std::uint32_t k);

/// Identical positive label for every patch whose center falls inside the
/// box (boundary inclusive), zero elsewhere; the last labeled patch absorbs
/// the rounding residual so the map sums to exactly 1. When no patch center
/// qualifies, falls back to the single patch containing the box center with
/// value 1; `center_fallback`, when non-null, reports that the fallback
/// fired.
LabelMap uniform_label_map(const PatchGrid& grid, const BoundingBox& b,
                           bool* center_fallback = nullptr);

/// Patches whose region does not overlap b (zero-area contact counts as
/// non-overlap, so the set is maximal).
SuppressionSet suppression_set(const PatchGrid& grid, const BoundingBox& b);

} // namespace v2p
