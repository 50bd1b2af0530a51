#pragma once

#include <cstdint>
#include <vector>

namespace v2p {

/// Pixel location, continuous coordinates, origin top-left.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned pixel rectangle [x_min,x_max] x [y_min,y_max].
struct PatchRect {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    Point center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

/// Ground-truth region, continuous pixel coordinates.
/// Requires strictly positive width and height; throws std::invalid_argument
/// otherwise.
struct BoundingBox {
    double x1, y1, x2, y2;

    BoundingBox(double x1, double y1, double x2, double y2);

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }

    bool inside_image(double image_width, double image_height) const {
        return x1 >= 0.0 && y1 >= 0.0 && x2 <= image_width && y2 <= image_height;
    }

    /// Boundary-inclusive point containment.
    bool contains(const Point& p) const {
        return p.x >= x1 && p.x <= x2 && p.y >= y1 && p.y <= y2;
    }
};

Point bbox_center(const BoundingBox& b);

/// Partition of an image into rows x cols patches of side `patch_size`;
/// edge patches are clipped to the image, so every pixel belongs to exactly
/// one patch. Index i is row-major in [0, M).
struct PatchGrid {
    std::uint32_t image_width = 0;
    std::uint32_t image_height = 0;
    std::uint32_t patch_size = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;

    PatchGrid() = default;
    PatchGrid(std::uint32_t image_width, std::uint32_t image_height,
              std::uint32_t patch_size);

    std::uint32_t patch_count() const { return rows * cols; }

    /// Patch index of the patch whose region contains the point (regions are
    /// half-open internally; points on the shared edge belong to the higher
    /// patch, points on the image boundary clamp to the last patch).
    std::uint32_t patch_index_of(const Point& p) const;

    bool operator==(const PatchGrid& o) const = default;
};

/// Pixel region R_i of patch i; edge patches clipped to image bounds.
/// Throws std::out_of_range for i >= M.
PatchRect patch_region(const PatchGrid& grid, std::uint32_t i);

/// Area of the overlap between a patch region and a box; 0 when disjoint or
/// merely touching.
double overlap_area(const PatchRect& region, const BoundingBox& b);

/// True iff the open-interior overlap area is > 0. Touching edges do not
/// count as intersection.
bool intersects(const PatchRect& region, const BoundingBox& b);

/// Intersection over union; 0 when disjoint.
double iou(const BoundingBox& a, const BoundingBox& b);

} // namespace v2p
