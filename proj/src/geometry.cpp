#include "v2p/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace v2p {

BoundingBox::BoundingBox(double x1, double y1, double x2, double y2)
    : x1(x1), y1(y1), x2(x2), y2(y2) {
    if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2))) {
        throw std::invalid_argument("BoundingBox: non-finite coordinate");
    }
    if (!(x1 < x2 && y1 < y2)) {
        throw std::invalid_argument("BoundingBox: requires x1 < x2 and y1 < y2, got [" +
                                    std::to_string(x1) + "," + std::to_string(y1) + "," +
                                    std::to_string(x2) + "," + std::to_string(y2) + "]");
    }
}

Point bbox_center(const BoundingBox& b) {
    return {0.5 * (b.x1 + b.x2), 0.5 * (b.y1 + b.y2)};
}

PatchGrid::PatchGrid(std::uint32_t image_width, std::uint32_t image_height,
                     std::uint32_t patch_size)
    : image_width(image_width), image_height(image_height), patch_size(patch_size) {
    if (image_width == 0 || image_height == 0 || patch_size == 0) {
        throw std::invalid_argument("PatchGrid: image dimensions and patch size must be positive");
    }
    rows = (image_height + patch_size - 1) / patch_size;
    cols = (image_width + patch_size - 1) / patch_size;
}

std::uint32_t PatchGrid::patch_index_of(const Point& p) const {
    const double s = static_cast<double>(patch_size);
    auto clamp_cell = [](double v, double size, std::uint32_t n) {
        const long cell = static_cast<long>(std::floor(v / size));
        return static_cast<std::uint32_t>(std::clamp<long>(cell, 0, static_cast<long>(n) - 1));
    };
    const std::uint32_t c = clamp_cell(p.x, s, cols);
    const std::uint32_t r = clamp_cell(p.y, s, rows);
    return r * cols + c;
}

PatchRect patch_region(const PatchGrid& grid, std::uint32_t i) {
    if (i >= grid.patch_count()) {
        throw std::out_of_range("patch_region: index " + std::to_string(i) +
                                " out of range [0, " + std::to_string(grid.patch_count()) + ")");
    }
    const std::uint32_t r = i / grid.cols;
    const std::uint32_t c = i % grid.cols;
    const double s = static_cast<double>(grid.patch_size);
    PatchRect rect;
    rect.x_min = c * s;
    rect.y_min = r * s;
    rect.x_max = std::min<double>((c + 1) * s, grid.image_width);
    rect.y_max = std::min<double>((r + 1) * s, grid.image_height);
    return rect;
}

double overlap_area(const PatchRect& region, const BoundingBox& b) {
    const double ix = std::min(region.x_max, b.x2) - std::max(region.x_min, b.x1);
    const double iy = std::min(region.y_max, b.y2) - std::max(region.y_min, b.y1);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    return ix * iy;
}

bool intersects(const PatchRect& region, const BoundingBox& b) {
    return overlap_area(region, b) > 0.0;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

} // namespace v2p
