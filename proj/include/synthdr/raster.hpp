#pragma once

#include "synthdr/render.hpp"

namespace synthdr {

namespace detail {

inline constexpr double kNearPlane = 1e-4;

struct RasterVertex {
    Vec3 cam;     // camera space (right, up, forward)
    Vec3 world;
    Vec3 normal;  // authored world-space normal
};

inline RasterVertex lerp_vertex(const RasterVertex& a, const RasterVertex& b, double t) {
    return {lerp(a.cam, b.cam, t), lerp(a.world, b.world, t), lerp(a.normal, b.normal, t)};
}

// Sutherland-Hodgman against the z = kNearPlane camera plane.
inline int clip_near(const RasterVertex* in, int count, RasterVertex* out) {
    int n = 0;
    for (int i = 0; i < count; ++i) {
        const RasterVertex& cur = in[i];
        const RasterVertex& nxt = in[(i + 1) % count];
        bool cur_in = cur.cam.z > kNearPlane;
        bool nxt_in = nxt.cam.z > kNearPlane;
        if (cur_in) out[n++] = cur;
        if (cur_in != nxt_in) {
            double t = (kNearPlane - cur.cam.z) / (nxt.cam.z - cur.cam.z);
            out[n++] = lerp_vertex(cur, nxt, t);
        }
    }
    return n;
}

// Scanline-free half-space rasterization with a z-buffer. `write` runs for
// every pixel whose depth test passes: write(x, y, instance, world, normal).
// Sequential triangle order + strict depth test make the result independent
// of everything but the scene.
template <typename WriteFn>
void rasterize_scene(const Scene& scene, const CameraFrame& frame, int width, int height,
                     WriteFn&& write) {
    std::vector<double> depth(static_cast<size_t>(width) * height,
                              std::numeric_limits<double>::infinity());

    for (uint32_t ii = 0; ii < scene.instances.size(); ++ii) {
        const SceneInstance& inst = scene.instances[ii];
        for (const auto& tri : inst.mesh.triangles) {
            RasterVertex verts[3];
            for (int k = 0; k < 3; ++k) {
                verts[k].world = inst.mesh.vertices[tri[k]];
                verts[k].normal = inst.mesh.normals.empty() ? Vec3{0, 0, 1}
                                                            : inst.mesh.normals[tri[k]];
                verts[k].cam = frame.to_camera(verts[k].world);
            }
            RasterVertex clipped[8];
            int n = clip_near(verts, 3, clipped);
            for (int k = 2; k < n; ++k) {
                const RasterVertex* v0 = &clipped[0];
                const RasterVertex* v1 = &clipped[k - 1];
                const RasterVertex* v2 = &clipped[k];

                Vec3 s0 = frame.project_camera(v0->cam);
                Vec3 s1 = frame.project_camera(v1->cam);
                Vec3 s2 = frame.project_camera(v2->cam);

                double area2 = (s1.x - s0.x) * (s2.y - s0.y) - (s1.y - s0.y) * (s2.x - s0.x);
                if (std::abs(area2) < 1e-12) continue;
                double inv_area = 1.0 / area2;

                int min_x = std::max(0, static_cast<int>(std::floor(std::min({s0.x, s1.x, s2.x}))));
                int max_x = std::min(width - 1,
                                     static_cast<int>(std::ceil(std::max({s0.x, s1.x, s2.x}))));
                int min_y = std::max(0, static_cast<int>(std::floor(std::min({s0.y, s1.y, s2.y}))));
                int max_y = std::min(height - 1,
                                     static_cast<int>(std::ceil(std::max({s0.y, s1.y, s2.y}))));

                for (int y = min_y; y <= max_y; ++y) {
                    double py = y + 0.5;
                    for (int x = min_x; x <= max_x; ++x) {
                        double px = x + 0.5;
                        double w0 = (s2.x - s1.x) * (py - s1.y) - (s2.y - s1.y) * (px - s1.x);
                        double w1 = (s0.x - s2.x) * (py - s2.y) - (s0.y - s2.y) * (px - s2.x);
                        double w2 = (s1.x - s0.x) * (py - s0.y) - (s1.y - s0.y) * (px - s0.x);
                        double b0 = w0 * inv_area;
                        double b1 = w1 * inv_area;
                        double b2 = w2 * inv_area;
                        if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0) continue;

                        // Perspective-correct interpolation via 1/z.
                        double inv_z = b0 / v0->cam.z + b1 / v1->cam.z + b2 / v2->cam.z;
                        double z = 1.0 / inv_z;
                        size_t idx = static_cast<size_t>(y) * width + x;
                        if (z >= depth[idx]) continue;
                        depth[idx] = z;

                        Vec3 world = (v0->world * (b0 / v0->cam.z) + v1->world * (b1 / v1->cam.z) +
                                      v2->world * (b2 / v2->cam.z)) * z;
                        Vec3 normal = (v0->normal * (b0 / v0->cam.z) + v1->normal * (b1 / v1->cam.z) +
                                       v2->normal * (b2 / v2->cam.z)) * z;
                        write(x, y, ii, world, normal);
                    }
                }
            }
        }
    }
}

// Lambert + normalized Blinn-Phong from each light's center point with
// inverse-square falloff; no shadows, no bounces. The Blinn exponent comes
// from roughness so the two backends share material inputs.
inline Vec3 shade_rasterized(const Scene& scene, const SceneInstance& inst, const Vec3& pos,
                             const Vec3& authored_normal, const Vec3& cam_pos) {
    Vec3 view = cam_pos - pos;
    double view_len = length(view);
    Vec3 v = view_len > 1e-12 ? view / view_len : Vec3{0, 0, 1};

    if (inst.material.emissive())
        return dot(authored_normal, v) > 0.0 ? inst.material.emission : Vec3{0, 0, 0};

    Vec3 n = authored_normal;
    double nl = length(n);
    n = nl > 1e-12 ? n / nl : Vec3{0, 0, 1};
    if (dot(n, v) < 0.0) n = -n;  // two-sided

    Vec3 albedo = inst.material.albedo_at(pos, n);
    double metalness = inst.material.metalness;
    double roughness = std::max(inst.material.roughness, kRoughnessFloor);
    Vec3 f0 = lerp(Vec3{0.04, 0.04, 0.04}, albedo, metalness);
    Vec3 kd = albedo * ((1.0 - metalness) * kInvPi);
    double exponent = std::clamp(2.0 / (roughness * roughness) - 2.0, 1.0, 4096.0);

    Vec3 out{0, 0, 0};
    for (const AreaLight& light : scene.lights) {
        Vec3 to_light = light.center - pos;
        double d2 = length_sq(to_light);
        if (d2 < 1e-12) continue;
        Vec3 l = to_light / std::sqrt(d2);
        double cos_n = dot(n, l);
        if (cos_n <= 0.0) continue;
        // Intensity P*color/pi matches the path-traced emitter at normal
        // incidence.
        Vec3 irradiance = light.color * (light.power * kInvPi / d2) * cos_n;
        Vec3 h = normalize(l + v);
        double blinn = std::pow(std::max(dot(n, h), 0.0), exponent) * (exponent + 2.0) / (8.0 * kPi);
        out += (kd + f0 * blinn) * irradiance;
    }
    return out;
}

}  // namespace detail

// Perspective projection + z-buffer, direct lighting only. Renders at 2x
// and box-downsamples; the id pass runs at output resolution instead so
// label masks stay crisp.
inline RenderBuffer render_rasterized(const Scene& scene, const CameraSpec& camera,
                                      const RenderSettings& settings,
                                      RenderDiagnostics* diag = nullptr) {
    CameraFrame frame(camera);
    int w2 = camera.image_width * 2;
    int h2 = camera.image_height * 2;
    std::vector<Vec3> color(static_cast<size_t>(w2) * h2, Vec3{0, 0, 0});

    detail::rasterize_scene(scene, frame, w2, h2,
                            [&](int x, int y, uint32_t ii, const Vec3& world, const Vec3& normal) {
                                color[static_cast<size_t>(y) * w2 + x] = detail::shade_rasterized(
                                    scene, scene.instances[ii], world, normal, camera.position);
                            });

    RenderBuffer buffer(camera.image_width, camera.image_height);
    std::atomic<uint64_t> clamped{0};
    for (int y = 0; y < camera.image_height; ++y)
        for (int x = 0; x < camera.image_width; ++x) {
            Vec3 sum = color[static_cast<size_t>(2 * y) * w2 + 2 * x] +
                       color[static_cast<size_t>(2 * y) * w2 + 2 * x + 1] +
                       color[static_cast<size_t>(2 * y + 1) * w2 + 2 * x] +
                       color[static_cast<size_t>(2 * y + 1) * w2 + 2 * x + 1];
            buffer.at(x, y) = detail::sanitize_radiance(sum * 0.25, clamped);
        }
    if (diag) diag->clamped_pixels = clamped.load();
    return buffer;
}

// Instance-id pass: identical projection and depth resolution as the
// rasterized backend (everything occludes), but center-sampled at output
// resolution and writing target ids only.
inline IdBuffer render_id_pass(const Scene& scene, const CameraSpec& camera) {
    CameraFrame frame(camera);
    IdBuffer ids(camera.image_width, camera.image_height);
    detail::rasterize_scene(scene, frame, camera.image_width, camera.image_height,
                            [&](int x, int y, uint32_t ii, const Vec3&, const Vec3&) {
                                ids.at(x, y) = scene.instances[ii].id;
                            });
    return ids;
}

// Primary-visibility ids by tracing one center ray per pixel; the reference
// the id pass is validated against.
inline IdBuffer trace_primary_ids(const Scene& scene, const CameraSpec& camera) {
    CameraFrame frame(camera);
    IdBuffer ids(camera.image_width, camera.image_height);
    for (int y = 0; y < camera.image_height; ++y)
        for (int x = 0; x < camera.image_width; ++x) {
            Ray ray = frame.ray_through(x + 0.5, y + 0.5);
            auto hit = scene.bvh.intersect(ray);
            if (hit) ids.at(x, y) = scene.instances[hit->instance].id;
        }
    return ids;
}

}  // namespace synthdr
