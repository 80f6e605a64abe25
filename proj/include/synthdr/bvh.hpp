#pragma once

#include <algorithm>
#include <numeric>
#include <optional>

#include "synthdr/mesh.hpp"

namespace synthdr {

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
    double t_min = 1e-7;
    double t_max = std::numeric_limits<double>::infinity();
};

struct Hit {
    double t = 0.0;
    uint32_t instance = 0;   // index of the source mesh passed to build_bvh
    uint32_t triangle = 0;   // triangle index within that mesh
    double u = 0.0, v = 0.0;  // barycentrics of v1, v2
};

// Moller-Trumbore. Relative epsilon keeps edge hits stable at scene scale.
inline bool intersect_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                               double t_max, double& t, double& u, double& v) {
    Vec3 e1 = v1 - v0;
    Vec3 e2 = v2 - v0;
    Vec3 p = cross(ray.dir, e2);
    double det = dot(e1, p);
    if (std::abs(det) < 1e-14) return false;
    double inv_det = 1.0 / det;
    Vec3 s = ray.origin - v0;
    u = dot(s, p) * inv_det;
    if (u < -1e-9 || u > 1.0 + 1e-9) return false;
    Vec3 q = cross(s, e1);
    v = dot(ray.dir, q) * inv_det;
    if (v < -1e-9 || u + v > 1.0 + 1e-9) return false;
    t = dot(e2, q) * inv_det;
    return t > ray.t_min && t < t_max;
}

class Bvh {
public:
    struct Node {
        Aabb bounds;
        uint32_t first = 0;   // leaf: first triangle; internal: left child (right = left + ...)
        uint32_t count = 0;   // leaf: triangle count; 0 for internal nodes
        uint32_t right = 0;   // internal: right child index (left child is this + 1)
    };

    struct Tri {
        Vec3 v0, v1, v2;
        uint32_t instance;
        uint32_t triangle;
    };

    Bvh() = default;

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Tri>& triangles() const { return tris_; }
    bool empty() const { return tris_.empty(); }

    static Bvh build(const std::vector<TriangleMesh>& meshes) {
        Bvh bvh;
        for (uint32_t mi = 0; mi < meshes.size(); ++mi) {
            const TriangleMesh& m = meshes[mi];
            for (uint32_t ti = 0; ti < m.triangles.size(); ++ti) {
                const auto& t = m.triangles[ti];
                bvh.tris_.push_back({m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], mi, ti});
            }
        }
        if (bvh.tris_.empty()) throw std::runtime_error("build_bvh: empty scene");

        std::vector<uint32_t> order(bvh.tris_.size());
        std::iota(order.begin(), order.end(), 0u);
        std::vector<Vec3> centroids(bvh.tris_.size());
        std::vector<Aabb> bounds(bvh.tris_.size());
        for (size_t i = 0; i < bvh.tris_.size(); ++i) {
            const Tri& t = bvh.tris_[i];
            bounds[i].expand(t.v0);
            bounds[i].expand(t.v1);
            bounds[i].expand(t.v2);
            centroids[i] = (t.v0 + t.v1 + t.v2) / 3.0;
        }

        bvh.nodes_.reserve(bvh.tris_.size() * 2);
        bvh.build_node(order, 0, static_cast<uint32_t>(order.size()), centroids, bounds);

        // Reorder triangles into leaf order so leaves are contiguous.
        std::vector<Tri> sorted;
        sorted.reserve(bvh.tris_.size());
        for (uint32_t i : order) sorted.push_back(bvh.tris_[i]);
        bvh.tris_ = std::move(sorted);
        return bvh;
    }

    std::optional<Hit> intersect(const Ray& ray) const {
        if (nodes_.empty()) return std::nullopt;
        Vec3 inv_dir{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};
        double best_t = ray.t_max;
        Hit best;
        bool found = false;

        uint32_t stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& node = nodes_[stack[--sp]];
            if (!slab_hit(node.bounds, ray, inv_dir, best_t)) continue;
            if (node.count > 0) {
                for (uint32_t i = node.first; i < node.first + node.count; ++i) {
                    double t, u, v;
                    if (intersect_triangle(ray, tris_[i].v0, tris_[i].v1, tris_[i].v2, best_t, t, u, v)) {
                        best_t = t;
                        best = {t, tris_[i].instance, tris_[i].triangle, u, v};
                        found = true;
                    }
                }
            } else {
                // Near child first.
                double t_left = entry_distance(nodes_[node.first].bounds, ray, inv_dir);
                double t_right = entry_distance(nodes_[node.right].bounds, ray, inv_dir);
                uint32_t near = node.first, far = node.right;
                if (t_right < t_left) std::swap(near, far);
                stack[sp++] = far;
                stack[sp++] = near;
            }
        }
        if (!found) return std::nullopt;
        return best;
    }

    // Any-hit query for shadow rays.
    bool occluded(const Ray& ray) const {
        if (nodes_.empty()) return false;
        Vec3 inv_dir{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};
        uint32_t stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& node = nodes_[stack[--sp]];
            if (!slab_hit(node.bounds, ray, inv_dir, ray.t_max)) continue;
            if (node.count > 0) {
                for (uint32_t i = node.first; i < node.first + node.count; ++i) {
                    double t, u, v;
                    if (intersect_triangle(ray, tris_[i].v0, tris_[i].v1, tris_[i].v2, ray.t_max, t, u, v))
                        return true;
                }
            } else {
                stack[sp++] = node.first;
                stack[sp++] = node.right;
            }
        }
        return false;
    }

private:
    static constexpr uint32_t kLeafSize = 4;

    std::vector<Node> nodes_;
    std::vector<Tri> tris_;

    static bool slab_hit(const Aabb& b, const Ray& ray, const Vec3& inv_dir, double t_max) {
        double t0 = ray.t_min, t1 = t_max;
        for (int a = 0; a < 3; ++a) {
            double near = (b.lo[a] - ray.origin[a]) * inv_dir[a];
            double far = (b.hi[a] - ray.origin[a]) * inv_dir[a];
            if (near > far) std::swap(near, far);
            t0 = std::max(t0, near);
            t1 = std::min(t1, far);
            if (t0 > t1) return false;
        }
        return true;
    }

    static double entry_distance(const Aabb& b, const Ray& ray, const Vec3& inv_dir) {
        double t0 = -std::numeric_limits<double>::infinity();
        double t1 = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            double near = (b.lo[a] - ray.origin[a]) * inv_dir[a];
            double far = (b.hi[a] - ray.origin[a]) * inv_dir[a];
            if (near > far) std::swap(near, far);
            t0 = std::max(t0, near);
            t1 = std::min(t1, far);
        }
        return t0 <= t1 ? t0 : std::numeric_limits<double>::infinity();
    }

    // Median split over the longest centroid axis; ties broken by original
    // index so construction is deterministic for a given input order.
    uint32_t build_node(std::vector<uint32_t>& order, uint32_t begin, uint32_t end,
                        const std::vector<Vec3>& centroids, const std::vector<Aabb>& bounds) {
        uint32_t index = static_cast<uint32_t>(nodes_.size());
        nodes_.emplace_back();
        Aabb node_bounds;
        Aabb centroid_bounds;
        for (uint32_t i = begin; i < end; ++i) {
            node_bounds.expand(bounds[order[i]]);
            centroid_bounds.expand(centroids[order[i]]);
        }
        nodes_[index].bounds = node_bounds;

        uint32_t count = end - begin;
        if (count <= kLeafSize) {
            nodes_[index].first = begin;
            nodes_[index].count = count;
            return index;
        }

        Vec3 ext = centroid_bounds.extent();
        int axis = 0;
        if (ext.y > ext.x) axis = 1;
        if (ext.z > ext[axis]) axis = 2;

        uint32_t mid = begin + count / 2;
        std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                         [&](uint32_t a, uint32_t b) {
                             double ca = centroids[a][axis], cb = centroids[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });

        uint32_t left = build_node(order, begin, mid, centroids, bounds);  // = index + 1
        uint32_t right = build_node(order, mid, end, centroids, bounds);
        nodes_[index].first = left;
        nodes_[index].count = 0;
        nodes_[index].right = right;
        return index;
    }
};

inline Bvh build_bvh(const std::vector<TriangleMesh>& meshes) { return Bvh::build(meshes); }

}  // namespace synthdr
