#pragma once

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "synthdr/mesh.hpp"

namespace synthdr {

enum class MeshFormat { obj, stl, from_extension };

namespace detail {

inline std::runtime_error mesh_error(const std::string& path, size_t line, const std::string& what) {
    std::ostringstream os;
    os << path;
    if (line > 0) os << ":" << line;
    os << ": " << what;
    return std::runtime_error(os.str());
}

// Drops sliver triangles, checks indices, derives normals when absent.
inline void finalize_mesh(TriangleMesh& mesh, const std::string& path, bool have_normals) {
    std::vector<std::array<uint32_t, 3>> kept;
    kept.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        for (uint32_t i : t)
            if (i >= mesh.vertices.size())
                throw mesh_error(path, 0, "triangle index " + std::to_string(i) + " out of range");
        double area = triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        if (area <= kDegenerateAreaM2) {
            ++mesh.degenerate_dropped;
            continue;
        }
        kept.push_back(t);
    }
    mesh.triangles = std::move(kept);
    if (mesh.triangles.empty()) throw mesh_error(path, 0, "empty mesh");
    if (!have_normals || mesh.normals.size() != mesh.vertices.size()) {
        compute_vertex_normals(mesh);
    } else {
        for (Vec3& n : mesh.normals) {
            double len = length(n);
            n = len > 1e-20 ? n / len : Vec3{0, 0, 1};
        }
    }
}

// OBJ face corner: v, v/vt, v//vn, v/vt/vn; 1-based, negatives count from
// the end.
inline uint32_t resolve_obj_index(long idx, size_t count, const std::string& path, size_t line) {
    long resolved = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
    if (resolved < 0 || resolved >= static_cast<long>(count))
        throw mesh_error(path, line, "vertex index " + std::to_string(idx) + " out of range");
    return static_cast<uint32_t>(resolved);
}

inline TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mesh_error(path, 0, "cannot open file");

    TriangleMesh mesh;
    std::vector<Vec3> file_normals;
    std::vector<Vec3> corner_normal_sum;  // accumulated onto vertices
    std::vector<int> corner_normal_count;
    bool any_face_normal = false;

    std::string linebuf;
    size_t lineno = 0;
    while (std::getline(in, linebuf)) {
        ++lineno;
        std::istringstream ls(linebuf);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;

        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw mesh_error(path, lineno, "malformed vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "vn") {
            Vec3 n;
            if (!(ls >> n.x >> n.y >> n.z)) throw mesh_error(path, lineno, "malformed normal");
            file_normals.push_back(n);
        } else if (tag == "f") {
            std::vector<uint32_t> poly;
            std::vector<long> poly_normals;
            std::string corner;
            while (ls >> corner) {
                long vi = 0, ni = 0;
                size_t s1 = corner.find('/');
                try {
                    vi = std::stol(corner.substr(0, s1));
                    if (s1 != std::string::npos) {
                        size_t s2 = corner.find('/', s1 + 1);
                        if (s2 != std::string::npos && s2 + 1 < corner.size())
                            ni = std::stol(corner.substr(s2 + 1));
                    }
                } catch (const std::exception&) {
                    throw mesh_error(path, lineno, "malformed face corner '" + corner + "'");
                }
                poly.push_back(resolve_obj_index(vi, mesh.vertices.size(), path, lineno));
                poly_normals.push_back(ni);
            }
            if (poly.size() < 3) throw mesh_error(path, lineno, "face with fewer than 3 corners");
            for (size_t i = 1; i + 1 < poly.size(); ++i)
                mesh.triangles.push_back({poly[0], poly[i], poly[i + 1]});
            // Average referenced corner normals per vertex.
            for (size_t i = 0; i < poly.size(); ++i) {
                if (poly_normals[i] == 0) continue;
                any_face_normal = true;
                uint32_t ni = resolve_obj_index(poly_normals[i], file_normals.size(), path, lineno);
                if (corner_normal_sum.size() < mesh.vertices.size()) {
                    corner_normal_sum.resize(mesh.vertices.size(), Vec3{0, 0, 0});
                    corner_normal_count.resize(mesh.vertices.size(), 0);
                }
                corner_normal_sum[poly[i]] += file_normals[ni];
                corner_normal_count[poly[i]] += 1;
            }
        }
        // Other tags (vt, o, g, s, usemtl, mtllib, ...) are ignored.
    }

    bool have_normals = false;
    if (any_face_normal) {
        corner_normal_sum.resize(mesh.vertices.size(), Vec3{0, 0, 0});
        corner_normal_count.resize(mesh.vertices.size(), 0);
        mesh.normals.assign(mesh.vertices.size(), Vec3{0, 0, 1});
        have_normals = true;
        for (size_t i = 0; i < mesh.vertices.size(); ++i) {
            if (corner_normal_count[i] > 0) mesh.normals[i] = corner_normal_sum[i];
            else have_normals = false;  // partial normals: rederive everything
        }
    }
    finalize_mesh(mesh, path, have_normals);
    return mesh;
}

inline TriangleMesh load_stl_ascii(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mesh_error(path, 0, "cannot open file");
    TriangleMesh mesh;
    std::string tok;
    size_t vert_in_facet = 0;
    while (in >> tok) {
        if (tok == "vertex") {
            Vec3 v;
            if (!(in >> v.x >> v.y >> v.z)) throw mesh_error(path, 0, "malformed vertex record");
            mesh.vertices.push_back(v);
            if (++vert_in_facet == 3) {
                uint32_t n = static_cast<uint32_t>(mesh.vertices.size());
                mesh.triangles.push_back({n - 3, n - 2, n - 1});
                vert_in_facet = 0;
            }
        }
    }
    if (vert_in_facet != 0) throw mesh_error(path, 0, "truncated facet");
    finalize_mesh(mesh, path, false);
    return mesh;
}

inline TriangleMesh load_stl_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mesh_error(path, 0, "cannot open file");
    char header[80];
    in.read(header, 80);
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in) throw mesh_error(path, 0, "truncated STL header");

    TriangleMesh mesh;
    mesh.vertices.reserve(static_cast<size_t>(count) * 3);
    mesh.triangles.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        float rec[12];  // normal + 3 vertices
        in.read(reinterpret_cast<char*>(rec), 48);
        uint16_t attr = 0;
        in.read(reinterpret_cast<char*>(&attr), 2);
        if (!in) throw mesh_error(path, 0, "truncated at facet " + std::to_string(i));
        uint32_t base = static_cast<uint32_t>(mesh.vertices.size());
        for (int v = 0; v < 3; ++v)
            mesh.vertices.push_back({rec[3 + 3 * v], rec[4 + 3 * v], rec[5 + 3 * v]});
        mesh.triangles.push_back({base, base + 1, base + 2});
    }
    finalize_mesh(mesh, path, false);
    return mesh;
}

inline bool stl_is_ascii(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mesh_error(path, 0, "cannot open file");
    char buf[512];
    in.read(buf, sizeof buf);
    std::streamsize got = in.gcount();
    std::string head(buf, static_cast<size_t>(got));
    // Binary files frequently start with "solid" too; require the "facet"
    // keyword to call it ASCII.
    if (head.rfind("solid", 0) != 0) return false;
    return head.find("facet") != std::string::npos;
}

}  // namespace detail

inline TriangleMesh load_mesh(const std::string& path, MeshFormat format = MeshFormat::from_extension) {
    if (format == MeshFormat::from_extension) {
        size_t dot = path.find_last_of('.');
        std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
        for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (ext == "obj") format = MeshFormat::obj;
        else if (ext == "stl") format = MeshFormat::stl;
        else throw detail::mesh_error(path, 0, "unsupported mesh format '." + ext + "' (OBJ and STL only)");
    }
    if (format == MeshFormat::obj) return detail::load_obj(path);
    return detail::stl_is_ascii(path) ? detail::load_stl_ascii(path) : detail::load_stl_binary(path);
}

}  // namespace synthdr
