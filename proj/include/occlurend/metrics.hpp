// Evaluation metrics in linear RGB: PSNR (capped at 99 dB for identical
// images) and raw mean absolute error, plus point-to-surface mesh distance
// and a fixed false-color ramp for error maps.
#pragma once

#include <string>

#include "occlurend/image.hpp"
#include "occlurend/mesh.hpp"

namespace occlurend {

struct ImageMetrics {
    double psnr = 0.0;
    double mae = 0.0;
};

// region_mask optional (single channel); throws on empty mask support.
ImageMetrics metrics(const Image& render, const Image& target, const Image* region_mask = nullptr);

// Least-squares global scalar fit: argmin_s || s * a - b || over the mask.
double global_scalar_alignment(const Image& a, const Image& b, const Image* region_mask = nullptr);

// RMS of vertex-to-closest-surface distances from mesh a onto mesh b.
double mesh_rms_distance(const TriangleMesh& a, const TriangleMesh& b);

// Seven-stop ramp black-blue-cyan-green-yellow-red-white over t in [0,1].
Vec3 false_color(double t);

// |a - b| per pixel, channel-averaged, mapped through the ramp; max_error
// sets the scale (values at or above map to the last stop).
Image error_map(const Image& a, const Image& b, double max_error);

}  // namespace occlurend
