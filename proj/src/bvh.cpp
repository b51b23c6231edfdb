#include "occlurend/bvh.hpp"

#include <algorithm>
#include <cmath>

namespace occlurend {

std::optional<Hit> intersect_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const Ray& ray) {
    Vec3 e1 = b - a;
    Vec3 e2 = c - a;
    Vec3 pvec = cross(ray.direction, e2);
    double det = dot(e1, pvec);
    if (det == 0.0) return std::nullopt;
    double inv_det = 1.0 / det;
    Vec3 tvec = ray.origin - a;
    double u = dot(tvec, pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    Vec3 qvec = cross(tvec, e1);
    double v = dot(ray.direction, qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    double t = dot(e2, qvec) * inv_det;
    if (t < ray.t_min || t > ray.t_max) return std::nullopt;
    Hit hit;
    hit.t = t;
    hit.b1 = u;
    hit.b2 = v;
    return hit;
}

namespace {

inline bool slab_hit(const Vec3& bmin, const Vec3& bmax, const Vec3& o, const Vec3& inv_d, double t_min, double t_max) {
    for (int ax = 0; ax < 3; ++ax) {
        double t0 = (bmin[ax] - o[ax]) * inv_d[ax];
        double t1 = (bmax[ax] - o[ax]) * inv_d[ax];
        if (t0 > t1) std::swap(t0, t1);
        t_min = t0 > t_min ? t0 : t_min;
        t_max = t1 < t_max ? t1 : t_max;
        if (t_min > t_max) return false;
    }
    return true;
}

}  // namespace

void Bvh::build(const TriangleMesh& mesh) {
    nodes_.clear();
    tri_order_.resize(mesh.face_count());
    for (size_t i = 0; i < tri_order_.size(); ++i) tri_order_[i] = static_cast<int>(i);
    if (tri_order_.empty()) return;
    std::vector<Vec3> centroids(mesh.face_count());
    for (size_t f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.faces[f];
        centroids[f] = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
    }
    nodes_.reserve(2 * mesh.face_count());
    build_range(mesh, centroids, 0, static_cast<int>(tri_order_.size()));
}

int Bvh::build_range(const TriangleMesh& mesh, std::vector<Vec3>& centroids, int begin, int end) {
    int node_index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    Vec3 bmin(1e300, 1e300, 1e300), bmax(-1e300, -1e300, -1e300);
    Vec3 cmin = bmin, cmax = bmax;
    for (int i = begin; i < end; ++i) {
        const auto& t = mesh.faces[tri_order_[i]];
        for (int k = 0; k < 3; ++k) {
            bmin = min(bmin, mesh.vertices[t[k]]);
            bmax = max(bmax, mesh.vertices[t[k]]);
        }
        cmin = min(cmin, centroids[tri_order_[i]]);
        cmax = max(cmax, centroids[tri_order_[i]]);
    }
    nodes_[node_index].box_min = bmin;
    nodes_[node_index].box_max = bmax;

    int count = end - begin;
    Vec3 extent = cmax - cmin;
    int axis = 0;
    if (extent.y > extent.x) axis = 1;
    if (extent.z > extent[axis]) axis = 2;
    if (count <= kLeafSize || extent[axis] <= 0.0) {
        nodes_[node_index].first_tri = begin;
        nodes_[node_index].tri_count = count;
        return node_index;
    }
    int mid = begin + count / 2;
    std::nth_element(tri_order_.begin() + begin, tri_order_.begin() + mid, tri_order_.begin() + end,
                     [&](int lhs, int rhs) {
                         double cl = centroids[lhs][axis], cr = centroids[rhs][axis];
                         return cl < cr || (cl == cr && lhs < rhs);
                     });
    build_range(mesh, centroids, begin, mid);  // left child is node_index + 1
    int right = build_range(mesh, centroids, mid, end);
    nodes_[node_index].right_child = right;
    nodes_[node_index].tri_count = 0;
    return node_index;
}

std::optional<Hit> Bvh::intersect(const TriangleMesh& mesh, const Ray& ray) const {
    if (nodes_.empty()) return std::nullopt;
    Vec3 inv_d(1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z);
    std::optional<Hit> best;
    double t_closest = ray.t_max;
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        int ni = stack[--sp];
        const Node& node = nodes_[ni];
        if (!slab_hit(node.box_min, node.box_max, ray.origin, inv_d, ray.t_min, t_closest)) continue;
        if (node.tri_count > 0) {
            for (int i = 0; i < node.tri_count; ++i) {
                int f = tri_order_[node.first_tri + i];
                const auto& t = mesh.faces[f];
                Ray clipped = ray;
                clipped.t_max = t_closest;
                auto hit = intersect_triangle(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], clipped);
                if (hit) {
                    // Smaller face index wins exact ties so BVH == brute force.
                    if (!best || hit->t < best->t || (hit->t == best->t && f < best->face)) {
                        best = *hit;
                        best->face = f;
                        t_closest = hit->t;
                    }
                }
            }
        } else {
            stack[sp++] = node.right_child;
            stack[sp++] = ni + 1;
        }
    }
    return best;
}

bool Bvh::occluded(const TriangleMesh& mesh, const Ray& ray) const {
    if (nodes_.empty()) return false;
    Vec3 inv_d(1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z);
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        int ni = stack[--sp];
        const Node& node = nodes_[ni];
        if (!slab_hit(node.box_min, node.box_max, ray.origin, inv_d, ray.t_min, ray.t_max)) continue;
        if (node.tri_count > 0) {
            for (int i = 0; i < node.tri_count; ++i) {
                int f = tri_order_[node.first_tri + i];
                const auto& t = mesh.faces[f];
                if (intersect_triangle(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], ray)) return true;
            }
        } else {
            stack[sp++] = node.right_child;
            stack[sp++] = ni + 1;
        }
    }
    return false;
}

int occlusion_query(const Bvh& bvh, const TriangleMesh& mesh, const Vec3& x, const Vec3& w, const Vec3& offset_normal,
                    double eps) {
    Ray ray;
    ray.origin = x + offset_normal * eps + w * eps;
    ray.direction = w;
    ray.t_min = 0.0;
    ray.t_max = 1e300;
    return bvh.occluded(mesh, ray) ? 0 : 1;
}

}  // namespace occlurend
