// Small double-precision vector types used across the renderer.
// Double is deliberate: gradient checks against central finite differences
// need more headroom than float gives.
#pragma once

#include <cmath>
#include <cstdint>

namespace occlurend {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator*(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double length_squared(const Vec3& v) { return dot(v, v); }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalize(const Vec3& v) {
    double len = length(v);
    return len > 0.0 ? v / len : Vec3(0, 0, 0);
}

// Mirror reflection of w about unit n; both point away from the surface.
inline Vec3 reflect(const Vec3& w, const Vec3& n) { return n * (2.0 * dot(w, n)) - w; }

inline Vec3 min(const Vec3& a, const Vec3& b) {
    return {std::fmin(a.x, b.x), std::fmin(a.y, b.y), std::fmin(a.z, b.z)};
}
inline Vec3 max(const Vec3& a, const Vec3& b) {
    return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)};
}

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Orthonormal basis with n as the z axis. The helper axis is picked by the
// smallest normal component so the cross products stay well conditioned.
struct Onb {
    Vec3 t, b, n;

    explicit Onb(const Vec3& normal) : n(normal) {
        Vec3 up = std::fabs(n.x) <= std::fabs(n.y)
                      ? (std::fabs(n.x) <= std::fabs(n.z) ? Vec3(1, 0, 0) : Vec3(0, 0, 1))
                      : (std::fabs(n.y) <= std::fabs(n.z) ? Vec3(0, 1, 0) : Vec3(0, 0, 1));
        t = normalize(cross(up, n));
        b = cross(n, t);
    }

    Vec3 to_world(const Vec3& local) const { return t * local.x + b * local.y + n * local.z; }
    Vec3 to_local(const Vec3& w) const { return {dot(w, t), dot(w, b), dot(w, n)}; }
};

// Row-major 3x3 rotation plus translation; rigid transforms only.
struct RigidTransform {
    double r[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    Vec3 t;

    Vec3 apply_point(const Vec3& p) const {
        return {r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + t.x,
                r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + t.y,
                r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + t.z};
    }
    Vec3 apply_vector(const Vec3& v) const {
        return {r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
                r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
                r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z};
    }
    // Rotation transpose; equals the inverse rotation for rigid transforms.
    Vec3 apply_vector_transposed(const Vec3& v) const {
        return {r[0][0] * v.x + r[1][0] * v.y + r[2][0] * v.z,
                r[0][1] * v.x + r[1][1] * v.y + r[2][1] * v.z,
                r[0][2] * v.x + r[1][2] * v.y + r[2][2] * v.z};
    }
    RigidTransform inverse() const {
        RigidTransform inv;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) inv.r[i][j] = r[j][i];
        inv.t = -inv.apply_vector_unrotated(t);
        return inv;
    }
    static RigidTransform rotation_axis_angle(const Vec3& axis, double angle_rad);
    static RigidTransform identity() { return {}; }

private:
    Vec3 apply_vector_unrotated(const Vec3& v) const {
        return {r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
                r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
                r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z};
    }
};

inline RigidTransform RigidTransform::rotation_axis_angle(const Vec3& axis, double angle_rad) {
    Vec3 a = normalize(axis);
    double c = std::cos(angle_rad), s = std::sin(angle_rad), ic = 1.0 - c;
    RigidTransform m;
    m.r[0][0] = c + a.x * a.x * ic;
    m.r[0][1] = a.x * a.y * ic - a.z * s;
    m.r[0][2] = a.x * a.z * ic + a.y * s;
    m.r[1][0] = a.y * a.x * ic + a.z * s;
    m.r[1][1] = c + a.y * a.y * ic;
    m.r[1][2] = a.y * a.z * ic - a.x * s;
    m.r[2][0] = a.z * a.x * ic - a.y * s;
    m.r[2][1] = a.z * a.y * ic + a.x * s;
    m.r[2][2] = c + a.z * a.z * ic;
    return m;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace occlurend
