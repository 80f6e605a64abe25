#pragma once

#include <atomic>
#include <thread>

#include "synthdr/camera.hpp"
#include "synthdr/image.hpp"
#include "synthdr/scene.hpp"

namespace synthdr {

enum class RenderBackend { path_traced, rasterized };

struct RenderSettings {
    RenderBackend backend = RenderBackend::path_traced;
    int samples_per_pixel = 64;  // path tracing only
    int max_depth = 6;
    double exposure = 1.0;
    uint64_t seed = 0;
    int threads = 1;
};

struct RenderDiagnostics {
    uint64_t clamped_pixels = 0;  // NaN/Inf/negative values fixed at write
};

namespace detail {

inline constexpr int kRouletteDepth = 3;

inline Vec3 offset_origin(const Vec3& p, const Vec3& geom_normal, const Vec3& dir) {
    double scale = 1e-7 * std::max(1.0, max_component({std::abs(p.x), std::abs(p.y), std::abs(p.z)}));
    return p + geom_normal * (dot(geom_normal, dir) > 0.0 ? scale : -scale);
}

inline double power_heuristic(double pdf_a, double pdf_b) {
    double a2 = pdf_a * pdf_a;
    return a2 / (a2 + pdf_b * pdf_b);
}

// Solid-angle pdf of next-event estimation picking exactly this point:
// uniform light choice x uniform area sampling, converted by d^2 / cos.
inline double light_pdf_solid_angle(const Scene& scene, const AreaLight& light, double dist,
                                    double cos_light) {
    if (cos_light <= 1e-9) return 0.0;
    return dist * dist / (light.area() * cos_light * static_cast<double>(scene.lights.size()));
}

inline Vec3 trace_path(const Scene& scene, Ray ray, int max_depth, Rng& rng) {
    Vec3 radiance{0, 0, 0};
    Vec3 throughput{1, 1, 1};
    double prev_brdf_pdf = 0.0;  // solid-angle pdf of the bounce that produced `ray`

    for (int depth = 0;; ++depth) {
        auto hit = scene.bvh.intersect(ray);
        if (!hit) break;
        SurfacePoint sp = evaluate_hit(scene, ray, *hit);

        if (sp.emission.x > 0 || sp.emission.y > 0 || sp.emission.z > 0) {
            double mis = 1.0;
            if (depth > 0 && sp.instance->light_index >= 0) {
                // NEE at the previous vertex could have sampled this point.
                const AreaLight& light = scene.lights[sp.instance->light_index];
                double cos_light = dot(light.normal, -ray.dir);
                double pdf_light = light_pdf_solid_angle(scene, light, hit->t, cos_light);
                mis = power_heuristic(prev_brdf_pdf, pdf_light);
            }
            radiance += throughput * sp.emission * mis;
        }

        if (depth >= max_depth) break;

        Vec3 wo = -ray.dir;

        // Next-event estimation toward one uniformly chosen light.
        if (!scene.lights.empty()) {
            uint32_t li = rng.uniform_int(static_cast<uint32_t>(scene.lights.size()));
            const AreaLight& light = scene.lights[li];
            double su = rng.uniform(-light.half_u, light.half_u);
            double sv = rng.uniform(-light.half_v, light.half_v);
            Vec3 target = light.center + light.edge_u * su + light.edge_v * sv;
            Vec3 to_light = target - sp.position;
            double dist = length(to_light);
            if (dist > 1e-9) {
                Vec3 wi = to_light / dist;
                double cos_surface = dot(sp.shading_normal, wi);
                double cos_light = dot(light.normal, -wi);
                if (cos_surface > 0.0 && cos_light > 1e-9) {
                    double pdf_light = light_pdf_solid_angle(scene, light, dist, cos_light);
                    if (pdf_light > 0.0) {
                        Ray shadow;
                        shadow.origin = offset_origin(sp.position, sp.geom_normal, wi);
                        shadow.dir = wi;
                        shadow.t_max = dist * (1.0 - 1e-5);
                        if (!scene.bvh.occluded(shadow)) {
                            Vec3 f = evaluate_brdf(sp.params, wi, wo, sp.shading_normal);
                            double pdf_b = brdf_pdf(sp.params, wi, wo, sp.shading_normal);
                            double mis = power_heuristic(pdf_light, pdf_b);
                            radiance += throughput * f * light.radiance() *
                                        (cos_surface / pdf_light * mis);
                        }
                    }
                }
            }
        }

        auto bs = sample_brdf(sp.params, wo, sp.shading_normal, rng);
        if (!bs) break;
        throughput *= bs->reflectance * (dot(sp.shading_normal, bs->wi) / bs->pdf);

        if (depth >= kRouletteDepth) {
            double q = std::clamp(max_component(throughput), 0.5, 1.0);
            if (rng.uniform() >= q) break;
            throughput *= 1.0 / q;
        }

        prev_brdf_pdf = bs->pdf;
        ray.origin = offset_origin(sp.position, sp.geom_normal, bs->wi);
        ray.dir = bs->wi;
        ray.t_max = std::numeric_limits<double>::infinity();
    }
    return radiance;
}

inline Vec3 sanitize_radiance(Vec3 v, std::atomic<uint64_t>& clamped) {
    if (!is_finite(v) || v.x < 0 || v.y < 0 || v.z < 0) {
        clamped.fetch_add(1, std::memory_order_relaxed);
        v = {std::isfinite(v.x) ? std::max(v.x, 0.0) : 0.0,
             std::isfinite(v.y) ? std::max(v.y, 0.0) : 0.0,
             std::isfinite(v.z) ? std::max(v.z, 0.0) : 0.0};
    }
    return v;
}

// Runs fn(row) for every row on `threads` workers. Rows are independent, so
// scheduling order cannot affect the output.
template <typename Fn>
void parallel_rows(int height, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1) {
        for (int y = 0; y < height; ++y) fn(y);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int y = next.fetch_add(1); y < height; y = next.fetch_add(1)) fn(y);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Unidirectional path tracer with next-event estimation and multiple
// importance sampling. Each (pixel, sample) has its own RNG stream derived
// from (seed, image index), so the output is bit-identical for any thread
// count or scheduling order.
inline RenderBuffer render_pathtraced(const Scene& scene, const CameraSpec& camera,
                                      const RenderSettings& settings, uint64_t image_index = 0,
                                      RenderDiagnostics* diag = nullptr) {
    bool has_emitter = !scene.lights.empty();
    for (const SceneInstance& inst : scene.instances)
        if (inst.material.emissive()) has_emitter = true;
    if (!has_emitter) throw std::invalid_argument("render_pathtraced: scene has no light source");

    CameraFrame frame(camera);
    RenderBuffer buffer(camera.image_width, camera.image_height);
    std::atomic<uint64_t> clamped{0};

    uint64_t pixel_seed = splitmix64(splitmix64(settings.seed) + image_index * 8 +
                                     static_cast<uint64_t>(StreamPurpose::render));
    int spp = std::max(1, settings.samples_per_pixel);
    double inv_spp = 1.0 / spp;

    detail::parallel_rows(camera.image_height, settings.threads, [&](int y) {
        for (int x = 0; x < camera.image_width; ++x) {
            uint64_t pixel_index = static_cast<uint64_t>(y) * camera.image_width + x;
            Vec3 sum{0, 0, 0};
            for (int s = 0; s < spp; ++s) {
                Rng rng = make_stream(pixel_seed, pixel_index * static_cast<uint64_t>(spp) + s);
                double jx = rng.uniform();
                double jy = rng.uniform();
                Ray ray = frame.ray_through(x + jx, y + jy);
                sum += detail::trace_path(scene, ray, settings.max_depth, rng);
            }
            buffer.at(x, y) = detail::sanitize_radiance(sum * inv_spp, clamped);
        }
    });

    if (diag) diag->clamped_pixels = clamped.load();
    return buffer;
}

// Exposure multiply, per-channel Reinhard x/(1+x), then sRGB encoding.
inline ImageRgb8 tone_map(const RenderBuffer& hdr, double exposure = 1.0) {
    ImageRgb8 out(hdr.width, hdr.height);
    auto encode = [&](double x) {
        x = std::isfinite(x) ? std::clamp(x, 0.0, 1e30) : (x > 0 ? 1e30 : 0.0);
        x *= exposure;
        return to_byte(x / (1.0 + x));
    };
    for (int y = 0; y < hdr.height; ++y)
        for (int x = 0; x < hdr.width; ++x) {
            Vec3 v = hdr.at(x, y);
            uint8_t* px = out.pixel(x, y);
            px[0] = encode(v.x);
            px[1] = encode(v.y);
            px[2] = encode(v.z);
        }
    return out;
}

}  // namespace synthdr
