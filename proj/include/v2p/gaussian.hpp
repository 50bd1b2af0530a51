#pragma once

#include "v2p/geometry.hpp"

namespace v2p {

/// Axis-aligned 2D Gaussian prior over click locations: centered at the box
/// centroid, sigma = extent / sigma_factor per axis, diagonal covariance.
struct GaussianSpec {
    Point mu;
    double sigma_x = 0.0;
    double sigma_y = 0.0;
    double sigma_factor = 0.0;
};

/// mu = box centroid, sigma_x = w / sigma_factor, sigma_y = h / sigma_factor.
/// Throws std::invalid_argument for sigma_factor <= 0.
GaussianSpec gaussian_spec(const BoundingBox& b, double sigma_factor);

/// Univariate normal CDF, evaluated via erfc for tail accuracy.
double normal_cdf(double x, double mu, double sigma);

/// Gaussian probability mass inside `region`: the separable product of two
/// univariate CDF differences (one per axis). Clamped to >= 0 against
/// floating-point cancellation.
double patch_mass(const GaussianSpec& spec, const PatchRect& region);

} // namespace v2p
