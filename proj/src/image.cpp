#include "occlurend/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace occlurend {

void sample_bilinear(const Image& img, double u, double v, double* out, double* dval_du, double* dval_dv) {
    // Texel centers sit at (i + 0.5) / width. Clamped addressing.
    double fx = u * img.width - 0.5;
    double fy = v * img.height - 0.5;
    double x0f = std::floor(fx), y0f = std::floor(fy);
    double ax = fx - x0f, ay = fy - y0f;
    int x0 = std::clamp(static_cast<int>(x0f), 0, img.width - 1);
    int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, img.width - 1);
    int y0 = std::clamp(static_cast<int>(y0f), 0, img.height - 1);
    int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, img.height - 1);
    // Clamp the fractional part as well so the edge derivative is zero, which
    // matches the clamped lookup the forward path performs.
    if (fx < 0) ax = 0;
    if (fx > img.width - 1) ax = 1;
    if (fy < 0) ay = 0;
    if (fy > img.height - 1) ay = 1;
    for (int c = 0; c < img.channels; ++c) {
        double v00 = img.at(x0, y0, c), v10 = img.at(x1, y0, c);
        double v01 = img.at(x0, y1, c), v11 = img.at(x1, y1, c);
        double top = v00 + (v10 - v00) * ax;
        double bot = v01 + (v11 - v01) * ax;
        out[c] = top + (bot - top) * ay;
        if (dval_du) {
            bool live_x = (fx >= 0 && fx <= img.width - 1);
            dval_du[c] = live_x ? ((v10 - v00) * (1 - ay) + (v11 - v01) * ay) * img.width : 0.0;
        }
        if (dval_dv) {
            bool live_y = (fy >= 0 && fy <= img.height - 1);
            dval_dv[c] = live_y ? (bot - top) * img.height : 0.0;
        }
    }
}

BilinearFootprint bilinear_footprint(const Image& img, double u, double v) {
    double fx = u * img.width - 0.5;
    double fy = v * img.height - 0.5;
    double x0f = std::floor(fx), y0f = std::floor(fy);
    double ax = fx - x0f, ay = fy - y0f;
    int x0 = std::clamp(static_cast<int>(x0f), 0, img.width - 1);
    int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, img.width - 1);
    int y0 = std::clamp(static_cast<int>(y0f), 0, img.height - 1);
    int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, img.height - 1);
    if (fx < 0) ax = 0;
    if (fx > img.width - 1) ax = 1;
    if (fy < 0) ay = 0;
    if (fy > img.height - 1) ay = 1;
    BilinearFootprint f;
    f.x[0] = x0; f.y[0] = y0; f.w[0] = (1 - ax) * (1 - ay);
    f.x[1] = x1; f.y[1] = y0; f.w[1] = ax * (1 - ay);
    f.x[2] = x0; f.y[2] = y1; f.w[2] = (1 - ax) * ay;
    f.x[3] = x1; f.y[3] = y1; f.w[3] = ax * ay;
    return f;
}

namespace {

bool host_is_little_endian() {
    uint16_t probe = 1;
    uint8_t byte;
    std::memcpy(&byte, &probe, 1);
    return byte == 1;
}

void swap_float_bytes(float* values, size_t count) {
    auto* bytes = reinterpret_cast<uint8_t*>(values);
    for (size_t i = 0; i < count; ++i) {
        std::swap(bytes[4 * i + 0], bytes[4 * i + 3]);
        std::swap(bytes[4 * i + 1], bytes[4 * i + 2]);
    }
}

// Reads one whitespace-delimited token, skipping comments is not part of PFM.
std::string next_token(std::istream& in) {
    std::string tok;
    in >> tok;
    if (!in) throw std::runtime_error("pfm: truncated header");
    return tok;
}

}  // namespace

Image read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pfm: cannot open " + path);
    std::string magic = next_token(in);
    int channels;
    if (magic == "PF") channels = 3;
    else if (magic == "Pf") channels = 1;
    else throw std::runtime_error("pfm: bad magic in " + path);
    int w = 0, h = 0;
    double scale = 0.0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        scale = std::stod(next_token(in));
    } catch (const std::exception&) {
        throw std::runtime_error("pfm: bad header in " + path);
    }
    if (w <= 0 || h <= 0 || scale == 0.0) throw std::runtime_error("pfm: bad dimensions in " + path);
    in.get();  // single whitespace byte after the scale line
    bool file_little = scale < 0.0;

    size_t count = static_cast<size_t>(w) * h * channels;
    std::vector<float> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw std::runtime_error("pfm: truncated pixel data in " + path);
    if (file_little != host_is_little_endian()) swap_float_bytes(raw.data(), count);

    Image img(w, h, channels);
    // PFM scanlines run bottom-to-top.
    for (int y = 0; y < h; ++y) {
        const float* src = raw.data() + static_cast<size_t>(h - 1 - y) * w * channels;
        double* dst = img.data.data() + static_cast<size_t>(y) * w * channels;
        for (int i = 0; i < w * channels; ++i) dst[i] = src[i];
    }
    return img;
}

void write_pfm(const std::string& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw std::runtime_error("pfm: only 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pfm: cannot write " + path);
    out << (img.channels == 3 ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n" << "-1.0" << "\n";
    size_t row = static_cast<size_t>(img.width) * img.channels;
    std::vector<float> line(row);
    for (int y = img.height - 1; y >= 0; --y) {
        const double* src = img.data.data() + static_cast<size_t>(y) * row;
        for (size_t i = 0; i < row; ++i) line[i] = static_cast<float>(src[i]);
        if (!host_is_little_endian()) swap_float_bytes(line.data(), row);
        out.write(reinterpret_cast<const char*>(line.data()), static_cast<std::streamsize>(row * sizeof(float)));
    }
    if (!out) throw std::runtime_error("pfm: write failed for " + path);
}

void write_ppm(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ppm: cannot write " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = img.at(x, y, img.channels == 3 ? c : 0);
                v = std::clamp(v, 0.0, 1.0);
                v = std::pow(v, 1.0 / 2.2);
                row[static_cast<size_t>(x) * 3 + c] = static_cast<uint8_t>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
}

}  // namespace occlurend
