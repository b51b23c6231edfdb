#include "occlurend/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "occlurend/envmap.hpp"

namespace occlurend {

double loss_image(const Image& render, const Image& target, const Image* mask_weighting) {
    if (!render.same_shape(target)) throw std::runtime_error("loss_image: shape mismatch");
    if (mask_weighting && (mask_weighting->width != render.width || mask_weighting->height != render.height))
        throw std::runtime_error("loss_image: mask shape mismatch");
    double acc = 0.0, weight = 0.0;
    for (size_t p = 0; p < render.pixel_count(); ++p) {
        double w = mask_weighting ? mask_weighting->data[p] : 1.0;
        for (int c = 0; c < render.channels; ++c) {
            size_t i = p * render.channels + c;
            acc += w * std::fabs(render.data[i] - target.data[i]);
            weight += w;
        }
    }
    return weight > 0.0 ? acc / weight : 0.0;
}

double loss_mask(const Image& pred_mask, const Image& target_mask) {
    if (!pred_mask.same_shape(target_mask)) throw std::runtime_error("loss_mask: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred_mask.data.size(); ++i) acc += std::fabs(pred_mask.data[i] - target_mask.data[i]);
    return acc / pred_mask.data.size();
}

double loss_laplacian(const std::vector<Vec3>& v, const std::vector<Vec3>& v_init, const UniformLaplacian& lap) {
    if (v.size() != v_init.size() || static_cast<int>(v.size()) != lap.n)
        throw std::runtime_error("loss_laplacian: shape mismatch");
    std::vector<Vec3> delta(v.size());
    for (size_t i = 0; i < v.size(); ++i) delta[i] = v[i] - v_init[i];
    std::vector<Vec3> ld;
    lap.apply(delta, ld);
    double acc = 0.0;
    for (const Vec3& d : ld) acc += dot(d, d);
    return acc;
}

double loss_light_white(const EnvironmentMap& env) {
    double acc = 0.0;
    int64_t count = env.texel_count(0);
    for (int f = 0; f < 6; ++f) {
        const Image& img = env.face(0, f);
        for (size_t p = 0; p < img.pixel_count(); ++p) {
            double r = img.data[3 * p], g = img.data[3 * p + 1], b = img.data[3 * p + 2];
            double mean = (r + g + b) / 3.0;
            acc += std::fabs(r - mean) + std::fabs(g - mean) + std::fabs(b - mean);
        }
    }
    return acc / count;
}

double loss_rough_tv(const Image& roughness) {
    double acc = 0.0;
    for (int y = 0; y < roughness.height; ++y)
        for (int x = 0; x < roughness.width; ++x) {
            int x1 = std::min(x + 1, roughness.width - 1);
            int y1 = std::min(y + 1, roughness.height - 1);
            acc += std::fabs(roughness.at(x1, y, 0) - roughness.at(x, y, 0));
            acc += std::fabs(roughness.at(x, y1, 0) - roughness.at(x, y, 0));
        }
    return acc / roughness.pixel_count();
}

double loss_diffuse(const Image& diffuse_render, const Image& coverage_mask) {
    if (diffuse_render.width != coverage_mask.width || diffuse_render.height != coverage_mask.height)
        throw std::runtime_error("loss_diffuse: shape mismatch");
    double acc = 0.0;
    int64_t covered = 0;
    for (size_t p = 0; p < diffuse_render.pixel_count(); ++p) {
        if (coverage_mask.data[p] <= 0.0) continue;
        ++covered;
        for (int c = 0; c < diffuse_render.channels; ++c) {
            double v = diffuse_render.data[p * diffuse_render.channels + c];
            acc += v * v;
        }
    }
    return covered > 0 ? acc / (covered * diffuse_render.channels) : 0.0;
}

LossBreakdown total_loss(double image, double mask, double laplacian, double light, double rough, double diffuse,
                         const LossWeights& w) {
    LossBreakdown b;
    b.image = image;
    b.mask = mask;
    b.laplacian = laplacian;
    b.light = light;
    b.rough = rough;
    b.diffuse = diffuse;
    b.total = image + w.mask * mask + w.laplacian * laplacian + w.light * light + w.rough * rough + w.diffuse * diffuse;
    return b;
}

}  // namespace occlurend
