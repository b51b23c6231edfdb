// Uniform (combinatorial) graph Laplacian of a triangle mesh in CSR form:
// row i has degree(i) on the diagonal and -1 for every 1-ring neighbour.
// Symmetric, zero row sums, positive semi-definite.
#pragma once

#include <vector>

#include "occlurend/mesh.hpp"
#include "occlurend/vec.hpp"

namespace occlurend {

struct UniformLaplacian {
    int n = 0;
    std::vector<int> row_offsets;  // size n + 1
    std::vector<int> cols;
    std::vector<double> values;

    // y = L x for a per-vertex Vec3 field.
    void apply(const std::vector<Vec3>& x, std::vector<Vec3>& y) const;
    // y = L x for a scalar field.
    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    double coeff(int i, int j) const;
};

// Adjacency comes from face edges; any triangle soup with shared vertices
// is accepted (no manifold requirement).
UniformLaplacian build_uniform_laplacian(const TriangleMesh& mesh);

}  // namespace occlurend
