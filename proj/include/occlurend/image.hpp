// Image container plus the PFM / PPM codecs.
//
// Pixels are doubles in memory and float32 on disk (PFM). Rows are stored
// top-to-bottom in memory; the PFM codec flips to the format's bottom-up
// scanline order. PFM files are written little-endian (negative scale
// field); both endiannesses are accepted on read.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace occlurend {

struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    std::vector<double> data;  // row-major, interleaved channels

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0) : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
    bool same_shape(const Image& o) const { return width == o.width && height == o.height && channels == o.channels; }
};

// Bilinear sample with clamped addressing; uv in [0,1]^2, v=0 is the top row.
// Out parameters, when non-null, receive d(value)/du and d(value)/dv.
void sample_bilinear(const Image& img, double u, double v, double* out, double* dudval = nullptr, double* dvdval = nullptr);

// Texel indices and weights of the bilinear footprint at (u, v).
struct BilinearFootprint {
    int x[4];
    int y[4];
    double w[4];
};
BilinearFootprint bilinear_footprint(const Image& img, double u, double v);

// PFM: 'PF' for 3 channels, 'Pf' for 1. Throws std::runtime_error on malformed input.
Image read_pfm(const std::string& path);
void write_pfm(const std::string& path, const Image& img);

// PPM preview: 8-bit P6 after clamping to [0,1] and a fixed 1/2.2 gamma encode.
void write_ppm(const std::string& path, const Image& img);

}  // namespace occlurend
