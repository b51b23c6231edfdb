// Loss terms of the reconstruction objective and their weighted sum.
#pragma once

#include <vector>

#include "occlurend/image.hpp"
#include "occlurend/laplacian.hpp"
#include "occlurend/vec.hpp"

namespace occlurend {

struct LossWeights {
    double mask = 0.1;
    double laplacian = 10.0;
    double light = 0.1;
    double rough = 0.1;
    double diffuse = 0.01;
};

struct LossBreakdown {
    double image = 0.0;
    double mask = 0.0;
    double laplacian = 0.0;
    double light = 0.0;
    double rough = 0.0;
    double diffuse = 0.0;
    double total = 0.0;
};

// Mean absolute error over pixels and channels. When mask_weighting is given
// (single channel, same resolution) each pixel's contribution is scaled by
// the mask value and the mean is over the mask's total weight.
double loss_image(const Image& render, const Image& target, const Image* mask_weighting = nullptr);

// Mean absolute difference between masks.
double loss_mask(const Image& pred_mask, const Image& target_mask);

// || L (v - v_init) ||^2 summed over coordinates.
double loss_laplacian(const std::vector<Vec3>& v, const std::vector<Vec3>& v_init, const UniformLaplacian& lap);

// Mean over mip-0 texels of sum_c |c - mean(c)|, evaluated on radiance.
class EnvironmentMap;
double loss_light_white(const EnvironmentMap& env);

// Mean over texels of |r(u+1,v) - r(u,v)| + |r(u,v+1) - r(u,v)| with clamped
// borders (forward differences).
double loss_rough_tv(const Image& roughness);

// Mean of squared diffuse-render values over covered pixels (and channels).
double loss_diffuse(const Image& diffuse_render, const Image& coverage_mask);

LossBreakdown total_loss(double image, double mask, double laplacian, double light, double rough, double diffuse,
                         const LossWeights& w);

}  // namespace occlurend
