#include "v2p/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace v2p {

GaussianSpec gaussian_spec(const BoundingBox& b, double sigma_factor) {
    if (!(sigma_factor > 0.0)) {
        throw std::invalid_argument("gaussian_spec: sigma_factor must be > 0");
    }
    GaussianSpec spec;
    spec.mu = bbox_center(b);
    spec.sigma_x = b.width() / sigma_factor;
    spec.sigma_y = b.height() / sigma_factor;
    spec.sigma_factor = sigma_factor;
    return spec;
}

double normal_cdf(double x, double mu, double sigma) {
    return 0.5 * std::erfc((mu - x) / (sigma * M_SQRT2));
}

double patch_mass(const GaussianSpec& spec, const PatchRect& region) {
    const double mx = normal_cdf(region.x_max, spec.mu.x, spec.sigma_x) -
                      normal_cdf(region.x_min, spec.mu.x, spec.sigma_x);
    const double my = normal_cdf(region.y_max, spec.mu.y, spec.sigma_y) -
                      normal_cdf(region.y_min, spec.mu.y, spec.sigma_y);
    const double mass = mx * my;
    return mass > 0.0 ? mass : 0.0;
}

} // namespace v2p
