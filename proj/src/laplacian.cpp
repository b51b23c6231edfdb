#include "occlurend/laplacian.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace occlurend {

void UniformLaplacian::apply(const std::vector<Vec3>& x, std::vector<Vec3>& y) const {
    y.assign(n, Vec3(0, 0, 0));
    for (int i = 0; i < n; ++i) {
        Vec3 acc(0, 0, 0);
        for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k) acc += x[cols[k]] * values[k];
        y[i] = acc;
    }
}

void UniformLaplacian::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k) acc += x[cols[k]] * values[k];
        y[i] = acc;
    }
}

double UniformLaplacian::coeff(int i, int j) const {
    for (int k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
        if (cols[k] == j) return values[k];
    return 0.0;
}

UniformLaplacian build_uniform_laplacian(const TriangleMesh& mesh) {
    int n = static_cast<int>(mesh.vertex_count());
    std::vector<std::set<int>> adj(n);
    for (const auto& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            int a = f[k], b = f[(k + 1) % 3];
            if (a < 0 || a >= n || b < 0 || b >= n) throw std::runtime_error("laplacian: face index out of range");
            if (a != b) {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    UniformLaplacian lap;
    lap.n = n;
    lap.row_offsets.resize(n + 1, 0);
    for (int i = 0; i < n; ++i) lap.row_offsets[i + 1] = lap.row_offsets[i] + static_cast<int>(adj[i].size()) + 1;
    lap.cols.resize(lap.row_offsets[n]);
    lap.values.resize(lap.row_offsets[n]);
    for (int i = 0; i < n; ++i) {
        int k = lap.row_offsets[i];
        bool placed_diag = false;
        for (int j : adj[i]) {
            if (!placed_diag && j > i) {
                lap.cols[k] = i;
                lap.values[k] = static_cast<double>(adj[i].size());
                ++k;
                placed_diag = true;
            }
            lap.cols[k] = j;
            lap.values[k] = -1.0;
            ++k;
        }
        if (!placed_diag) {
            lap.cols[k] = i;
            lap.values[k] = static_cast<double>(adj[i].size());
            ++k;
        }
    }
    return lap;
}

}  // namespace occlurend
