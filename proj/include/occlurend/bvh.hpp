// Axis-aligned BVH over mesh triangles with nearest-hit and any-hit queries.
//
// Triangle tests run in double precision with inclusive edge comparisons, so
// rays crossing a shared edge register on at least one of the two faces and
// coverage masks stay crack-free. Nearest-hit ties on t prefer the smaller
// face index, which keeps the traversal order immaterial.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "occlurend/mesh.hpp"
#include "occlurend/vec.hpp"

namespace occlurend {

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
    double t_min = 0.0;
    double t_max = 1e300;
};

struct Hit {
    double t = 0.0;
    int face = -1;
    double b1 = 0.0;  // barycentric weight of vertex 1; b0 = 1 - b1 - b2
    double b2 = 0.0;
};

// Double-precision Moller-Trumbore with inclusive boundaries.
std::optional<Hit> intersect_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const Ray& ray);

class Bvh {
public:
    static constexpr int kLeafSize = 4;

    Bvh() = default;
    explicit Bvh(const TriangleMesh& mesh) { build(mesh); }
    void build(const TriangleMesh& mesh);

    std::optional<Hit> intersect(const TriangleMesh& mesh, const Ray& ray) const;
    // Any-hit: true as soon as one triangle intersects in [t_min, t_max].
    bool occluded(const TriangleMesh& mesh, const Ray& ray) const;

    bool empty() const { return nodes_.empty(); }

    struct Node {
        Vec3 box_min, box_max;
        int right_child = -1;  // internal: left child is the next node, right child stored here
        int first_tri = 0;     // leaf: range into tri_order_
        int tri_count = 0;     // 0 for internal nodes
    };
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<int>& triangle_order() const { return tri_order_; }

private:
    std::vector<Node> nodes_;
    std::vector<int> tri_order_;

    int build_range(const TriangleMesh& mesh, std::vector<Vec3>& centroids, int begin, int end);
};

// Binary visibility V(x, w): 1 iff the ray from x offset by eps along both
// the shading normal and the ray direction hits nothing.
int occlusion_query(const Bvh& bvh, const TriangleMesh& mesh, const Vec3& x, const Vec3& w, const Vec3& offset_normal,
                    double eps);

}  // namespace occlurend
