#include "occlurend/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace occlurend {

ImageMetrics metrics(const Image& render, const Image& target, const Image* region_mask) {
    if (!render.same_shape(target)) throw std::runtime_error("metrics: shape mismatch");
    if (region_mask && (region_mask->width != render.width || region_mask->height != render.height))
        throw std::runtime_error("metrics: mask shape mismatch");
    double abs_acc = 0.0, sq_acc = 0.0, weight = 0.0;
    for (size_t p = 0; p < render.pixel_count(); ++p) {
        double w = region_mask ? region_mask->data[p] : 1.0;
        if (w <= 0.0) continue;
        for (int c = 0; c < render.channels; ++c) {
            double d = render.data[p * render.channels + c] - target.data[p * target.channels + c];
            abs_acc += w * std::fabs(d);
            sq_acc += w * d * d;
            weight += w;
        }
    }
    if (weight <= 0.0) throw std::runtime_error("metrics: empty region mask");
    ImageMetrics m;
    m.mae = abs_acc / weight;
    double mse = sq_acc / weight;
    m.psnr = mse > 0.0 ? std::min(10.0 * std::log10(1.0 / mse), 99.0) : 99.0;
    return m;
}

double global_scalar_alignment(const Image& a, const Image& b, const Image* region_mask) {
    if (!a.same_shape(b)) throw std::runtime_error("metrics: shape mismatch");
    double num = 0.0, den = 0.0;
    for (size_t p = 0; p < a.pixel_count(); ++p) {
        double w = region_mask ? region_mask->data[p] : 1.0;
        if (w <= 0.0) continue;
        for (int c = 0; c < a.channels; ++c) {
            double av = a.data[p * a.channels + c], bv = b.data[p * b.channels + c];
            num += w * av * bv;
            den += w * av * av;
        }
    }
    return den > 0.0 ? num / den : 1.0;
}

namespace {

// Closest point on a triangle (Ericson, Real-Time Collision Detection).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace

double mesh_rms_distance(const TriangleMesh& a, const TriangleMesh& b) {
    if (a.vertices.empty() || b.faces.empty()) throw std::runtime_error("mesh distance: empty input");
    double acc = 0.0;
    for (const Vec3& p : a.vertices) {
        double best = 1e300;
        for (const auto& f : b.faces) {
            Vec3 q = closest_point_on_triangle(p, b.vertices[f[0]], b.vertices[f[1]], b.vertices[f[2]]);
            best = std::min(best, length_squared(p - q));
        }
        acc += best;
    }
    return std::sqrt(acc / a.vertices.size());
}

Vec3 false_color(double t) {
    static const Vec3 stops[7] = {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 0}, {1, 1, 0}, {1, 0, 0}, {1, 1, 1}};
    t = std::clamp(t, 0.0, 1.0) * 6.0;
    int i = std::min(static_cast<int>(t), 5);
    double f = t - i;
    return stops[i] * (1.0 - f) + stops[i + 1] * f;
}

Image error_map(const Image& a, const Image& b, double max_error) {
    if (!a.same_shape(b)) throw std::runtime_error("error_map: shape mismatch");
    Image out(a.width, a.height, 3);
    for (size_t p = 0; p < a.pixel_count(); ++p) {
        double err = 0.0;
        for (int c = 0; c < a.channels; ++c)
            err += std::fabs(a.data[p * a.channels + c] - b.data[p * b.channels + c]);
        err /= a.channels;
        Vec3 col = false_color(max_error > 0.0 ? err / max_error : 0.0);
        out.data[3 * p] = col.x;
        out.data[3 * p + 1] = col.y;
        out.data[3 * p + 2] = col.z;
    }
    return out;
}

}  // namespace occlurend
