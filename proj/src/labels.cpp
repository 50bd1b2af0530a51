#include "v2p/labels.hpp"

#include "v2p/error.hpp"

#include <cmath>
#include <stdexcept>

namespace v2p {

double LabelMap::sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

std::uint32_t LabelMap::peak_index() const {
    std::uint32_t best = 0;
    for (std::uint32_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

namespace {

std::vector<double> raw_gaussian_masses(const PatchGrid& grid, const BoundingBox& b,
                                        double sigma_factor, bool parallel) {
    const GaussianSpec spec = gaussian_spec(b, sigma_factor);
    const std::int64_t m = grid.patch_count();
    std::vector<double> y(static_cast<std::size_t>(m));
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < m; ++i) {
            y[i] = patch_mass(spec, patch_region(grid, static_cast<std::uint32_t>(i)));
        }
    } else {
        for (std::int64_t i = 0; i < m; ++i) {
            y[i] = patch_mass(spec, patch_region(grid, static_cast<std::uint32_t>(i)));
        }
    }
    return y;
}

LabelMap normalize_gaussian(const PatchGrid& grid, std::vector<double> y,
                            double epsilon) {
    double total = 0.0;
    for (double v : y) total += v; // fixed order, independent of thread count
    if (total == 0.0) {
        throw NumericError("gaussian_label_map: all patch masses are zero (degenerate spec)");
    }
    const double denom = total + epsilon;
    for (double& v : y) v /= denom;
    LabelMap map;
    map.grid = grid;
    map.values = std::move(y);
    map.kind = LabelKind::gaussian;
    map.epsilon = epsilon;
    return map;
}

} // namespace

LabelMap gaussian_label_map(const PatchGrid& grid, const BoundingBox& b,
                            double sigma_factor, double epsilon) {
    return normalize_gaussian(grid, raw_gaussian_masses(grid, b, sigma_factor, true), epsilon);
}

LabelMap gaussian_label_map_serial(const PatchGrid& grid, const BoundingBox& b,
                                   double sigma_factor, double epsilon) {
    return normalize_gaussian(grid, raw_gaussian_masses(grid, b, sigma_factor, false), epsilon);
}

double uniform_share(std::uint32_t k) {
    if (k == 0) throw std::invalid_argument("uniform_share: k must be >= 1");
    return 1.0 / static_cast<double>(k);
}

LabelMap uniform_label_map(const PatchGrid& grid, const BoundingBox& b,
                           bool* center_fallback) {
    const std::uint32_t m = grid.patch_count();
    LabelMap map;
    map.grid = grid;
    map.kind = LabelKind::uniform;
    map.epsilon = 0.0;
    map.values.assign(m, 0.0);

    std::vector<std::uint32_t> inside;
    for (std::uint32_t i = 0; i < m; ++i) {
        if (b.contains(patch_region(grid, i).center())) inside.push_back(i);
    }
    if (center_fallback) *center_fallback = inside.empty();
    if (inside.empty()) {
        // Sub-patch element: no patch center qualifies.
        map.values[grid.patch_index_of(bbox_center(b))] = 1.0;
        return map;
    }
    // For many k the ordered sum of k copies of the nearest double to 1/k
    // misses 1.0 by an ulp or two, so the last labeled patch absorbs the
    // residual: with the partial sum s in [1/2, 1], 1 - s is exact
    // (Sterbenz), making the full row-major sum land on 1.0 exactly.
    const double share = uniform_share(static_cast<std::uint32_t>(inside.size()));
    double partial = 0.0;
    for (std::size_t j = 0; j + 1 < inside.size(); ++j) {
        map.values[inside[j]] = share;
        partial += share;
    }
    map.values[inside.back()] = 1.0 - partial;
    return map;
}

SuppressionSet suppression_set(const PatchGrid& grid, const BoundingBox& b) {
    const std::uint32_t m = grid.patch_count();
    SuppressionSet set;
    set.grid = grid;
    for (std::uint32_t i = 0; i < m; ++i) {
        if (!intersects(patch_region(grid, i), b)) set.indices.push_back(i);
    }
    return set;
}

} // namespace v2p
