// Triangle-only mesh container with per-corner UVs, plus the OBJ codec.
//
// Conventions:
// - Indices are 0-based in memory (OBJ's 1-based indices are converted in I/O).
// - UVs are stored per corner (3 per face) so seams need no vertex splits.
// - Vertex normals are the area-weighted average of incident face normals;
//   shading interpolates these, geometric face normals are only used for
//   ray offsets.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "occlurend/vec.hpp"

namespace occlurend {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<std::array<Vec2, 3>> corner_uvs;  // one entry per face
    std::vector<Vec3> vertex_normals;

    size_t vertex_count() const { return vertices.size(); }
    size_t face_count() const { return faces.size(); }

    // Unnormalized geometric face normal; |.| = 2 * area.
    Vec3 face_normal_unnormalized(int f) const {
        const auto& t = faces[f];
        return cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
    }

    Vec3 bbox_min() const;
    Vec3 bbox_max() const;
    double bbox_diagonal() const;
};

// Throws std::runtime_error on out-of-range indices, non-finite data, or a
// degenerate face (area <= 1e-12), naming the offending face.
void validate_mesh(const TriangleMesh& mesh);

// Area-weighted vertex normals, normalized. Throws on degenerate faces.
void compute_vertex_normals(TriangleMesh& mesh);

// OBJ subset: v, vt, f (triangles; f entries as v, v/vt, v//vn or v/vt/vn).
// Positions are written with 7 significant digits.
TriangleMesh read_obj(const std::string& path);
void write_obj(const std::string& path, const TriangleMesh& mesh);

}  // namespace occlurend
