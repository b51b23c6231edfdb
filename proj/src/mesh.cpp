#include "occlurend/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace occlurend {

Vec3 TriangleMesh::bbox_min() const {
    Vec3 lo(1e300, 1e300, 1e300);
    for (const Vec3& v : vertices) lo = min(lo, v);
    return lo;
}

Vec3 TriangleMesh::bbox_max() const {
    Vec3 hi(-1e300, -1e300, -1e300);
    for (const Vec3& v : vertices) hi = max(hi, v);
    return hi;
}

double TriangleMesh::bbox_diagonal() const {
    if (vertices.empty()) return 0.0;
    return length(bbox_max() - bbox_min());
}

void validate_mesh(const TriangleMesh& mesh) {
    int n = static_cast<int>(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i)
        if (!is_finite(mesh.vertices[i])) throw std::runtime_error("mesh: non-finite vertex " + std::to_string(i));
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        for (int k = 0; k < 3; ++k) {
            int idx = mesh.faces[f][k];
            if (idx < 0 || idx >= n) throw std::runtime_error("mesh: face " + std::to_string(f) + " index out of range");
        }
        double area2 = length(mesh.face_normal_unnormalized(static_cast<int>(f)));
        if (!(area2 > 2e-12)) throw std::runtime_error("mesh: degenerate face " + std::to_string(f));
    }
    if (!mesh.corner_uvs.empty() && mesh.corner_uvs.size() != mesh.faces.size())
        throw std::runtime_error("mesh: corner_uvs count does not match faces");
    for (size_t f = 0; f < mesh.corner_uvs.size(); ++f)
        for (int k = 0; k < 3; ++k) {
            const Vec2& uv = mesh.corner_uvs[f][k];
            if (!std::isfinite(uv.x) || !std::isfinite(uv.y))
                throw std::runtime_error("mesh: non-finite uv on face " + std::to_string(f));
        }
}

void compute_vertex_normals(TriangleMesh& mesh) {
    mesh.vertex_normals.assign(mesh.vertices.size(), Vec3(0, 0, 0));
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        Vec3 fn = mesh.face_normal_unnormalized(static_cast<int>(f));
        double area2 = length(fn);
        if (!(area2 > 2e-12)) throw std::runtime_error("mesh: degenerate face " + std::to_string(f));
        // fn's magnitude is twice the area, so summing raw cross products
        // is exactly the area weighting.
        for (int k = 0; k < 3; ++k) mesh.vertex_normals[mesh.faces[f][k]] += fn;
    }
    for (Vec3& n : mesh.vertex_normals) {
        double len = length(n);
        n = len > 0.0 ? n / len : Vec3(0, 0, 1);
    }
}

namespace {

// Parses one OBJ face corner: "v", "v/vt", "v//vn", "v/vt/vn".
void parse_corner(const std::string& tok, int* vi, int* ti) {
    *vi = 0;
    *ti = 0;
    size_t s1 = tok.find('/');
    if (s1 == std::string::npos) {
        *vi = std::stoi(tok);
        return;
    }
    *vi = std::stoi(tok.substr(0, s1));
    size_t s2 = tok.find('/', s1 + 1);
    std::string mid = s2 == std::string::npos ? tok.substr(s1 + 1) : tok.substr(s1 + 1, s2 - s1 - 1);
    if (!mid.empty()) *ti = std::stoi(mid);
}

}  // namespace

TriangleMesh read_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("obj: cannot open " + path);
    TriangleMesh mesh;
    std::vector<Vec2> uvs;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "v") {
            Vec3 p;
            ss >> p.x >> p.y >> p.z;
            if (ss.fail()) throw std::runtime_error("obj: bad vertex at line " + std::to_string(lineno));
            mesh.vertices.push_back(p);
        } else if (kind == "vt") {
            Vec2 uv;
            ss >> uv.x >> uv.y;
            if (ss.fail()) throw std::runtime_error("obj: bad uv at line " + std::to_string(lineno));
            uvs.push_back(uv);
        } else if (kind == "f") {
            std::string c0, c1, c2, extra;
            ss >> c0 >> c1 >> c2;
            if (ss.fail()) throw std::runtime_error("obj: bad face at line " + std::to_string(lineno));
            if (ss >> extra) throw std::runtime_error("obj: non-triangle face at line " + std::to_string(lineno));
            int vi[3], ti[3];
            parse_corner(c0, &vi[0], &ti[0]);
            parse_corner(c1, &vi[1], &ti[1]);
            parse_corner(c2, &vi[2], &ti[2]);
            std::array<int, 3> face;
            std::array<Vec2, 3> fuv{};
            for (int k = 0; k < 3; ++k) {
                if (vi[k] <= 0) throw std::runtime_error("obj: unsupported index at line " + std::to_string(lineno));
                face[k] = vi[k] - 1;
                if (ti[k] > 0) {
                    if (static_cast<size_t>(ti[k]) > uvs.size())
                        throw std::runtime_error("obj: uv index out of range at line " + std::to_string(lineno));
                    fuv[k] = uvs[ti[k] - 1];
                }
            }
            mesh.faces.push_back(face);
            mesh.corner_uvs.push_back(fuv);
        }
        // vn and everything else ignored; normals are recomputed.
    }
    validate_mesh(mesh);
    compute_vertex_normals(mesh);
    return mesh;
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("obj: cannot write " + path);
    char buf[160];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.7g %.7g %.7g\n", v.x, v.y, v.z);
        out << buf;
    }
    bool has_uv = !mesh.corner_uvs.empty();
    if (has_uv) {
        for (const auto& fuv : mesh.corner_uvs)
            for (const Vec2& uv : fuv) {
                std::snprintf(buf, sizeof(buf), "vt %.7g %.7g\n", uv.x, uv.y);
                out << buf;
            }
    }
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        if (has_uv)
            out << "f " << t[0] + 1 << "/" << 3 * f + 1 << " " << t[1] + 1 << "/" << 3 * f + 2 << " " << t[2] + 1 << "/"
                << 3 * f + 3 << "\n";
        else
            out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
    }
    if (!out) throw std::runtime_error("obj: write failed for " + path);
}

}  // namespace occlurend
