#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "synthdr/math.hpp"

namespace synthdr {

// Triangles with area below this are dropped at load; CAD exports are full
// of slivers and zero-area fans.
inline constexpr double kDegenerateAreaM2 = 1e-12;

struct TriangleMesh {
    std::vector<Vec3> vertices;                    // meters
    std::vector<std::array<uint32_t, 3>> triangles;
    std::vector<Vec3> normals;                     // per vertex, unit length
    uint32_t degenerate_dropped = 0;               // diagnostics from load

    size_t triangle_count() const { return triangles.size(); }
    size_t vertex_count() const { return vertices.size(); }
    bool empty() const { return triangles.empty(); }
};

struct Pose {
    Vec3 translation{0, 0, 0};   // meters
    Vec3 rotation{0, 0, 0};      // XYZ euler, radians, each in [-pi, pi]
    double scale = 1.0;          // uniform, > 0

    Mat3 rotation_matrix() const { return rotation_xyz(rotation); }

    Vec3 apply(const Vec3& v) const { return rotation_matrix() * (v * scale) + translation; }

    Pose inverse() const {
        Mat3 rt = rotation_matrix().transposed();
        Pose inv;
        inv.scale = 1.0 / scale;
        inv.rotation = euler_from_rotation(rt);
        inv.translation = rt * translation * (-1.0 / scale);
        return inv;
    }
};

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::max()};
    Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
            std::numeric_limits<double>::lowest()};

    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z; }
    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }
    double diagonal() const { return valid() ? length(hi - lo) : 0.0; }

    void expand(const Vec3& p) {
        lo = min(lo, p);
        hi = max(hi, p);
    }
    void expand(const Aabb& b) {
        lo = min(lo, b.lo);
        hi = max(hi, b.hi);
    }
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
               p.z <= hi.z;
    }
    bool overlaps(const Aabb& b) const {
        return lo.x <= b.hi.x && hi.x >= b.lo.x && lo.y <= b.hi.y && hi.y >= b.lo.y &&
               lo.z <= b.hi.z && hi.z >= b.lo.z;
    }
    // Open-interval overlap on the ground plane; touching footprints count
    // as disjoint.
    bool footprint_overlaps(const Aabb& b) const {
        return lo.x < b.hi.x && hi.x > b.lo.x && lo.y < b.hi.y && hi.y > b.lo.y;
    }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * length(cross(b - a, c - a));
}

inline Aabb mesh_aabb(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) throw std::runtime_error("mesh_aabb: empty mesh");
    Aabb box;
    for (const Vec3& v : mesh.vertices) box.expand(v);
    return box;
}

// Area-weighted vertex normals from face geometry.
inline void compute_vertex_normals(TriangleMesh& mesh) {
    mesh.normals.assign(mesh.vertices.size(), Vec3{0, 0, 0});
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        Vec3 fn = cross(b - a, c - a);  // magnitude = 2 * area
        mesh.normals[t[0]] += fn;
        mesh.normals[t[1]] += fn;
        mesh.normals[t[2]] += fn;
    }
    for (Vec3& n : mesh.normals) {
        double len = length(n);
        n = len > 1e-20 ? n / len : Vec3{0, 0, 1};
    }
}

// Scale, then rotate, then translate. Normals are rotated only.
inline TriangleMesh transform_mesh(const TriangleMesh& mesh, const Pose& pose) {
    TriangleMesh out;
    out.triangles = mesh.triangles;
    out.degenerate_dropped = mesh.degenerate_dropped;
    Mat3 rot = pose.rotation_matrix();
    out.vertices.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) out.vertices.push_back(rot * (v * pose.scale) + pose.translation);
    out.normals.reserve(mesh.normals.size());
    for (const Vec3& n : mesh.normals) out.normals.push_back(rot * n);
    return out;
}

// Translate along z so the lowest vertex sits on the ground plane.
inline TriangleMesh drop_to_ground(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) return mesh;
    double min_z = std::numeric_limits<double>::max();
    for (const Vec3& v : mesh.vertices) min_z = std::min(min_z, v.z);
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) v.z -= min_z;
    return out;
}

inline void append_mesh(TriangleMesh& dst, const TriangleMesh& src) {
    uint32_t base = static_cast<uint32_t>(dst.vertices.size());
    dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
    dst.normals.insert(dst.normals.end(), src.normals.begin(), src.normals.end());
    for (const auto& t : src.triangles) dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

// ---------------------------------------------------------------------------
// Procedural primitives, unit-scale and centered at the origin. These back
// the six distractor shapes and the test scenes.

enum class PrimitiveShape { cube, sphere, cone, cylinder, torus, icosphere };

inline constexpr int kPrimitiveShapeCount = 6;

inline const char* primitive_name(PrimitiveShape s) {
    switch (s) {
        case PrimitiveShape::cube: return "cube";
        case PrimitiveShape::sphere: return "sphere";
        case PrimitiveShape::cone: return "cone";
        case PrimitiveShape::cylinder: return "cylinder";
        case PrimitiveShape::torus: return "torus";
        case PrimitiveShape::icosphere: return "icosphere";
    }
    return "?";
}

inline TriangleMesh make_cube(double side = 1.0) {
    double h = side * 0.5;
    TriangleMesh m;
    m.vertices = {{-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h},
                  {-h, -h, h},  {h, -h, h},  {h, h, h},  {-h, h, h}};
    m.triangles = {{0, 2, 1}, {0, 3, 2},   // -z
                   {4, 5, 6}, {4, 6, 7},   // +z
                   {0, 1, 5}, {0, 5, 4},   // -y
                   {2, 3, 7}, {2, 7, 6},   // +y
                   {1, 2, 6}, {1, 6, 5},   // +x
                   {3, 0, 4}, {3, 4, 7}};  // -x
    compute_vertex_normals(m);
    return m;
}

inline TriangleMesh make_uv_sphere(double radius = 0.5, int rings = 12, int segments = 24) {
    TriangleMesh m;
    for (int r = 0; r <= rings; ++r) {
        double theta = kPi * r / rings;
        double st = std::sin(theta), ct = std::cos(theta);
        for (int s = 0; s <= segments; ++s) {
            double phi = kTwoPi * s / segments;
            m.vertices.push_back({radius * st * std::cos(phi), radius * st * std::sin(phi), radius * ct});
        }
    }
    auto idx = [&](int r, int s) { return static_cast<uint32_t>(r * (segments + 1) + s); };
    for (int r = 0; r < rings; ++r)
        for (int s = 0; s < segments; ++s) {
            if (r != 0) m.triangles.push_back({idx(r, s), idx(r, s + 1), idx(r + 1, s)});
            if (r != rings - 1) m.triangles.push_back({idx(r, s + 1), idx(r + 1, s + 1), idx(r + 1, s)});
        }
    compute_vertex_normals(m);
    return m;
}

inline TriangleMesh make_cone(double radius = 0.5, double height = 1.0, int segments = 24) {
    TriangleMesh m;
    double hz = height * 0.5;
    m.vertices.push_back({0, 0, hz});    // apex
    m.vertices.push_back({0, 0, -hz});   // base center
    for (int s = 0; s < segments; ++s) {
        double phi = kTwoPi * s / segments;
        m.vertices.push_back({radius * std::cos(phi), radius * std::sin(phi), -hz});
    }
    for (int s = 0; s < segments; ++s) {
        uint32_t a = 2 + s, b = 2 + (s + 1) % segments;
        m.triangles.push_back({0, a, b});
        m.triangles.push_back({1, b, a});
    }
    compute_vertex_normals(m);
    return m;
}

inline TriangleMesh make_cylinder(double radius = 0.5, double height = 1.0, int segments = 24) {
    TriangleMesh m;
    double hz = height * 0.5;
    m.vertices.push_back({0, 0, hz});
    m.vertices.push_back({0, 0, -hz});
    for (int s = 0; s < segments; ++s) {
        double phi = kTwoPi * s / segments;
        double c = std::cos(phi), sn = std::sin(phi);
        m.vertices.push_back({radius * c, radius * sn, hz});
        m.vertices.push_back({radius * c, radius * sn, -hz});
    }
    for (int s = 0; s < segments; ++s) {
        uint32_t t0 = 2 + 2 * s, b0 = t0 + 1;
        uint32_t t1 = 2 + 2 * ((s + 1) % segments), b1 = t1 + 1;
        m.triangles.push_back({0, t0, t1});          // top cap
        m.triangles.push_back({1, b1, b0});          // bottom cap
        m.triangles.push_back({t0, b0, b1});         // side
        m.triangles.push_back({t0, b1, t1});
    }
    compute_vertex_normals(m);
    return m;
}

inline TriangleMesh make_torus(double major = 0.35, double minor = 0.15, int major_segments = 24,
                               int minor_segments = 12) {
    TriangleMesh m;
    for (int i = 0; i < major_segments; ++i) {
        double u = kTwoPi * i / major_segments;
        double cu = std::cos(u), su = std::sin(u);
        for (int j = 0; j < minor_segments; ++j) {
            double v = kTwoPi * j / minor_segments;
            double r = major + minor * std::cos(v);
            m.vertices.push_back({r * cu, r * su, minor * std::sin(v)});
        }
    }
    auto idx = [&](int i, int j) {
        return static_cast<uint32_t>((i % major_segments) * minor_segments + (j % minor_segments));
    };
    for (int i = 0; i < major_segments; ++i)
        for (int j = 0; j < minor_segments; ++j) {
            m.triangles.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
            m.triangles.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
        }
    compute_vertex_normals(m);
    return m;
}

inline TriangleMesh make_icosphere(double radius = 0.5, int subdivisions = 2) {
    // Icosahedron, then midpoint subdivision projected back to the sphere.
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                               {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                               {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : verts) v = normalize(v);
    std::vector<std::array<uint32_t, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<uint64_t, uint32_t> midpoint;
        auto mid = [&](uint32_t a, uint32_t b) {
            uint64_t key = (static_cast<uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            uint32_t i = static_cast<uint32_t>(verts.size());
            verts.push_back(normalize((verts[a] + verts[b]) * 0.5));
            midpoint[key] = i;
            return i;
        };
        std::vector<std::array<uint32_t, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            uint32_t ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    TriangleMesh m;
    m.vertices.reserve(verts.size());
    for (const Vec3& v : verts) m.vertices.push_back(v * radius);
    m.triangles = std::move(faces);
    compute_vertex_normals(m);
    return m;
}

inline TriangleMesh make_primitive(PrimitiveShape shape) {
    switch (shape) {
        case PrimitiveShape::cube: return make_cube();
        case PrimitiveShape::sphere: return make_uv_sphere();
        case PrimitiveShape::cone: return make_cone();
        case PrimitiveShape::cylinder: return make_cylinder();
        case PrimitiveShape::torus: return make_torus();
        case PrimitiveShape::icosphere: return make_icosphere();
    }
    return make_cube();
}

}  // namespace synthdr
