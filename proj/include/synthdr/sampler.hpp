#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "synthdr/camera.hpp"
#include "synthdr/material.hpp"
#include "synthdr/mesh.hpp"
#include "synthdr/rng.hpp"

namespace synthdr {

// Axis-aligned rectangle on the ground plane.
struct Rect2 {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double diagonal() const { return std::hypot(width(), height()); }
    Vec3 center() const { return {(min_x + max_x) * 0.5, (min_y + max_y) * 0.5, 0.0}; }
};

struct CatalogCategory {
    std::string name;
    std::string mesh_path;
    double scale = 1.0;  // applied on top of the catalog unit scale
};

// Catalog with meshes loaded and scale factors folded in.
struct LoadedCatalog {
    std::vector<CatalogCategory> categories;
    std::vector<std::shared_ptr<const TriangleMesh>> meshes;  // parallel to categories

    size_t size() const { return categories.size(); }
};

// Asset pools the texture sampler draws from.
struct AssetPools {
    std::vector<std::string> background_images;  // sorted paths
    std::vector<std::string> object_images;      // sorted paths
    std::vector<MaterialSpec> materials;         // pbr material sets
};

enum class InstanceKind { target, distractor };

struct ObjectInstance {
    InstanceKind kind = InstanceKind::target;
    uint32_t category = 0;                       // targets: catalog index
    PrimitiveShape shape = PrimitiveShape::cube; // distractors only
    double shape_scale = 1.0;                    // distractors: edge scale in meters
    Pose pose;
    MaterialSpec material;
    uint32_t instance_id = 0;  // 1..N, contiguous over targets then distractors
    Aabb bounds;               // placed world-space AABB
};

struct AreaLight {
    Vec3 center;
    Vec3 normal;       // unit, points toward the lit side
    Vec3 edge_u, edge_v;  // unit edge directions, orthogonal to normal
    double half_u = 0.5, half_v = 0.5;  // meters
    double power = 100.0;               // radiant power, W
    Vec3 color{1, 1, 1};                // each channel in [0.25, 1]

    double area() const { return 4.0 * half_u * half_v; }
    // One-sided Lambertian emitter: P = pi * A * L.
    Vec3 radiance() const { return color * (power / (kPi * area())); }
};

// Everything one image's domain randomization produced.
struct SceneLayout {
    std::vector<ObjectInstance> targets;
    std::vector<ObjectInstance> distractors;
    Rect2 objects_area;
    double ground_side = 1.0;
    double wall_height = 0.5;
    std::string background_image;  // empty -> neutral gray walls
    CameraSpec camera;
    std::vector<AreaLight> lights;
    uint32_t placement_failures = 0;
    uint32_t distractor_failures = 0;
};

// ---------------------------------------------------------------------------
// Sampler parameter blocks (config.hpp populates these from JSON).

struct RotationLimits {
    double x = kPi, y = kPi, z = kPi;  // radians, per-axis clamp about zero
};

struct CameraRanges {
    double theta_min = deg_to_rad(5.0);
    double theta_max = deg_to_rad(85.0);
    double radius_factor_min = 0.9;
    double radius_factor_max = 1.8;
    double focal_mm_min = 35.0;
    double focal_mm_max = 85.0;
    double sensor_width_mm = 36.0;
    double look_at_shift_frac = 0.1;  // of the objects_area diagonal, per axis
    int image_width = 720;
    int image_height = 720;
};

struct LightRanges {
    double reference_area_m2 = 25.0;
    int max_count = 6;
    double power_min_w = 50.0;
    double power_max_w = 500.0;
    double size_min_m = 0.5;  // rectangle edge length
    double size_max_m = 1.5;
    double tilt_max = deg_to_rad(30.0);
};

struct DistractorRanges {
    int max_count = 8;
    double scale_min = 0.3;  // x mean target AABB diagonal
    double scale_max = 1.5;
};

struct TextureModePolicy {
    double p_solid = 1.0 / 3.0;
    double p_image = 1.0 / 3.0;
    double p_pbr = 1.0 / 3.0;
    // Uniform perturbation amplitude applied to pbr metalness/roughness per
    // draw; 0 uses library values verbatim.
    double pbr_jitter = 0.0;
};

struct SamplerRanges {
    int max_objects = 10;
    RotationLimits rotation;
    double placement_scale = 2.5;
    double scene_margin = 1.25;
    CameraRanges camera;
    LightRanges lights;
    DistractorRanges distractors;
    TextureModePolicy texture_modes;
    int placement_attempts = 100;
    int distractor_attempts = 50;
};

// ---------------------------------------------------------------------------
// Object sampling. Count is uniform in {0..max}; categories fill round-robin
// over a shuffled order so multiplicities differ by at most one.

inline std::vector<uint32_t> sample_object_set(size_t category_count, int max_objects, Rng& rng) {
    uint32_t n = rng.uniform_int(static_cast<uint32_t>(max_objects) + 1);
    std::vector<uint32_t> order(category_count);
    for (size_t i = 0; i < category_count; ++i) order[i] = static_cast<uint32_t>(i);
    shuffle(order, rng);
    std::vector<uint32_t> out;
    out.reserve(n);
    for (uint32_t j = 0; j < n; ++j) out.push_back(order[j % category_count]);
    return out;
}

// ---------------------------------------------------------------------------
// Pose sampling with ground-projected AABB rejection.

struct PlacedPose {
    Pose pose;
    Aabb bounds;
};

// Rotation uniform within per-axis clamps, footprint center uniform in the
// region, then a gravity drop so min z = 0. Fails (nullopt) when no
// non-overlapping placement is found within max_attempts.
inline std::optional<PlacedPose> sample_pose(const TriangleMesh& mesh, double scale,
                                             const std::vector<Aabb>& placed, const Rect2& region,
                                             const RotationLimits& limits, Rng& rng,
                                             int max_attempts = 100) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Vec3 euler{rng.uniform(-limits.x, limits.x), rng.uniform(-limits.y, limits.y),
                   rng.uniform(-limits.z, limits.z)};
        double cx = rng.uniform(region.min_x, region.max_x);
        double cy = rng.uniform(region.min_y, region.max_y);

        Mat3 rot = rotation_xyz(euler);
        Aabb local;
        for (const Vec3& v : mesh.vertices) local.expand(rot * (v * scale));

        Pose pose;
        pose.rotation = euler;
        pose.scale = scale;
        Vec3 mid = local.center();
        pose.translation = {cx - mid.x, cy - mid.y, -local.lo.z};

        Aabb world{local.lo + pose.translation, local.hi + pose.translation};
        bool overlap = false;
        for (const Aabb& other : placed)
            if (world.footprint_overlaps(other)) {
                overlap = true;
                break;
            }
        if (!overlap) return PlacedPose{pose, world};
    }
    return std::nullopt;
}

// Tight union rectangle of target footprints; empty scenes get a 1x1 m
// default at the origin so camera and scene-box sizing stay well defined.
inline Rect2 compute_objects_area(const std::vector<Aabb>& target_bounds) {
    if (target_bounds.empty()) return Rect2{-0.5, -0.5, 0.5, 0.5};
    Rect2 r{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Aabb& b : target_bounds) {
        r.min_x = std::min(r.min_x, b.lo.x);
        r.min_y = std::min(r.min_y, b.lo.y);
        r.max_x = std::max(r.max_x, b.hi.x);
        r.max_y = std::max(r.max_y, b.hi.y);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Camera sampling. Radius is a multiple of R = (d/2) / tan(fov_min/2), the
// distance at which the objects_area diagonal fills the narrowest field of
// view, so the object set fits the frame at the low end of the range.

inline double coverage_radius(const Rect2& objects_area, const CameraRanges& ranges) {
    double d = std::max(objects_area.diagonal(), 1e-6);
    double fov_min = 2.0 * std::atan(ranges.sensor_width_mm / (2.0 * ranges.focal_mm_max));
    return (d / 2.0) / std::tan(fov_min / 2.0);
}

inline CameraSpec sample_camera(const Rect2& objects_area, const CameraRanges& ranges, Rng& rng) {
    double base = coverage_radius(objects_area, ranges);
    CameraSpec cam;
    cam.r = rng.uniform(ranges.radius_factor_min * base, ranges.radius_factor_max * base);
    cam.theta = rng.uniform(ranges.theta_min, ranges.theta_max);
    cam.phi = rng.uniform(0.0, kTwoPi);
    cam.focal_length_mm = rng.uniform(ranges.focal_mm_min, ranges.focal_mm_max);
    cam.sensor_width_mm = ranges.sensor_width_mm;
    cam.image_width = ranges.image_width;
    cam.image_height = ranges.image_height;

    Vec3 center = objects_area.center();
    cam.position = center + spherical_offset(cam.r, cam.theta, cam.phi);
    double shift = ranges.look_at_shift_frac * objects_area.diagonal();
    cam.look_at = center + Vec3{rng.uniform(-shift, shift), rng.uniform(-shift, shift),
                                rng.uniform(-shift, shift)};
    return cam;
}

// ---------------------------------------------------------------------------
// Scene box: ground square plus four walls, sized from the camera shell and
// the objects_area so the sampled camera always sits strictly inside.

struct SceneBox {
    double ground_side = 1.0;
    double wall_height = 0.5;
};

inline SceneBox build_scene_box(const Rect2& objects_area, double r_max, double margin = 1.25) {
    SceneBox box;
    box.ground_side = std::max(objects_area.diagonal(), 2.0 * r_max) * margin;
    box.wall_height = box.ground_side / 2.0;
    return box;
}

// ---------------------------------------------------------------------------
// Illumination: light count follows the ground area, power scales with it,
// placement is uniform over the ground at an upper-wall height, facing
// downward with a bounded tilt.

inline std::vector<AreaLight> sample_lights(const Rect2& objects_area, const SceneBox& box,
                                            const LightRanges& ranges, Rng& rng) {
    double ground_area = box.ground_side * box.ground_side;
    int count = static_cast<int>(std::ceil(ground_area / ranges.reference_area_m2));
    count = std::clamp(count, 1, ranges.max_count);
    double power_scale = ground_area / ranges.reference_area_m2;

    Vec3 center = objects_area.center();
    double half = box.ground_side / 2.0;

    std::vector<AreaLight> lights;
    lights.reserve(count);
    for (int i = 0; i < count; ++i) {
        AreaLight light;
        double x = rng.uniform(center.x - half, center.x + half);
        double y = rng.uniform(center.y - half, center.y + half);
        double z = rng.uniform(0.5, 1.0) * box.wall_height;
        light.center = {x, y, z};

        double tilt = rng.uniform(0.0, ranges.tilt_max);
        double azimuth = rng.uniform(0.0, kTwoPi);
        light.normal = {std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth),
                        -std::cos(tilt)};
        branchless_onb(light.normal, light.edge_u, light.edge_v);

        light.half_u = rng.uniform(ranges.size_min_m, ranges.size_max_m) / 2.0;
        light.half_v = rng.uniform(ranges.size_min_m, ranges.size_max_m) / 2.0;
        light.power = rng.uniform(ranges.power_min_w, ranges.power_max_w) * power_scale;
        light.color = {rng.uniform(0.25, 1.0), rng.uniform(0.25, 1.0), rng.uniform(0.25, 1.0)};
        lights.push_back(light);
    }
    return lights;
}

// ---------------------------------------------------------------------------
// Texture assignment: one of three modes per configured probabilities.

inline MaterialSpec sample_texture(const TextureModePolicy& policy, const AssetPools& assets,
                                   Rng& rng) {
    double total = policy.p_solid + policy.p_image + policy.p_pbr;
    double u = rng.uniform() * total;
    MaterialSpec spec;
    if (u < policy.p_solid) {
        spec.mode = TextureMode::solid;
        spec.solid_color = {rng.uniform(), rng.uniform(), rng.uniform()};
    } else if (u < policy.p_solid + policy.p_image) {
        if (assets.object_images.empty())
            throw std::runtime_error("texture mode 'image' requires a non-empty object image directory");
        spec.mode = TextureMode::image;
        spec.image_path = assets.object_images[rng.uniform_int(
            static_cast<uint32_t>(assets.object_images.size()))];
    } else {
        if (assets.materials.empty())
            throw std::runtime_error("texture mode 'pbr' requires a non-empty material library");
        spec = assets.materials[rng.uniform_int(static_cast<uint32_t>(assets.materials.size()))];
        if (policy.pbr_jitter > 0.0) {
            spec.metalness = std::clamp(
                spec.metalness + rng.uniform(-policy.pbr_jitter, policy.pbr_jitter), 0.0, 1.0);
            spec.roughness = std::clamp(
                spec.roughness + rng.uniform(-policy.pbr_jitter, policy.pbr_jitter),
                kRoughnessFloor, 1.0);
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Distractors: the six primitive shapes, scaled relative to the targets,
// floating anywhere in the box as long as their 3D AABB avoids every target.

inline std::vector<ObjectInstance> sample_distractors(const Rect2& objects_area, const SceneBox& box,
                                                      const std::vector<Aabb>& target_bounds,
                                                      const DistractorRanges& ranges,
                                                      const TextureModePolicy& texture_policy,
                                                      const AssetPools& assets, Rng& rng,
                                                      uint32_t* failures = nullptr,
                                                      int max_attempts = 50) {
    double mean_diag = 0.2;  // fallback when the scene has no targets
    if (!target_bounds.empty()) {
        double sum = 0.0;
        for (const Aabb& b : target_bounds) sum += b.diagonal();
        mean_diag = sum / static_cast<double>(target_bounds.size());
    }

    uint32_t count = rng.uniform_int(static_cast<uint32_t>(ranges.max_count) + 1);
    Vec3 center = objects_area.center();
    double half = box.ground_side / 2.0;

    std::vector<ObjectInstance> out;
    for (uint32_t i = 0; i < count; ++i) {
        PrimitiveShape shape = static_cast<PrimitiveShape>(rng.uniform_int(kPrimitiveShapeCount));
        double scale = rng.uniform(ranges.scale_min, ranges.scale_max) * mean_diag;
        TriangleMesh mesh = make_primitive(shape);

        bool placed = false;
        for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
            Vec3 euler{rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi), rng.uniform(-kPi, kPi)};
            Vec3 pos{rng.uniform(center.x - half, center.x + half),
                     rng.uniform(center.y - half, center.y + half),
                     rng.uniform(0.0, box.wall_height)};
            Mat3 rot = rotation_xyz(euler);
            Aabb world;
            for (const Vec3& v : mesh.vertices) world.expand(rot * (v * scale) + pos);
            if (world.lo.z < 0.0) continue;
            bool overlap = false;
            for (const Aabb& t : target_bounds)
                if (world.overlaps(t)) {
                    overlap = true;
                    break;
                }
            if (overlap) continue;

            ObjectInstance inst;
            inst.kind = InstanceKind::distractor;
            inst.shape = shape;
            inst.shape_scale = scale;
            inst.pose = Pose{pos, euler, scale};
            inst.material = sample_texture(texture_policy, assets, rng);
            inst.bounds = world;
            out.push_back(std::move(inst));
            placed = true;
        }
        if (!placed && failures) ++(*failures);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Full per-image scene draw: objects, poses, area, camera, box, background,
// lights, distractors — in that order, off one substream.

inline SceneLayout sample_scene(const LoadedCatalog& catalog, const AssetPools& assets,
                                const SamplerRanges& ranges, Rng& rng) {
    SceneLayout layout;

    std::vector<uint32_t> chosen =
        catalog.size() > 0 ? sample_object_set(catalog.size(), ranges.max_objects, rng)
                           : std::vector<uint32_t>{};

    // Placement region sized from the chosen objects so rejection rarely
    // exhausts its attempts.
    double mean_diag = 0.0;
    for (uint32_t c : chosen) {
        Aabb b = mesh_aabb(*catalog.meshes[c]);
        mean_diag += b.diagonal() * catalog.categories[c].scale;
    }
    if (!chosen.empty()) mean_diag /= static_cast<double>(chosen.size());
    double side = std::max(0.5, ranges.placement_scale * std::sqrt(std::max<size_t>(chosen.size(), 1)) *
                                    std::max(mean_diag, 1e-3));
    Rect2 region{-side / 2.0, -side / 2.0, side / 2.0, side / 2.0};

    std::vector<Aabb> placed_bounds;
    for (uint32_t c : chosen) {
        auto placed = sample_pose(*catalog.meshes[c], catalog.categories[c].scale, placed_bounds,
                                  region, ranges.rotation, rng, ranges.placement_attempts);
        if (!placed) {
            ++layout.placement_failures;
            continue;
        }
        ObjectInstance inst;
        inst.kind = InstanceKind::target;
        inst.category = c;
        inst.pose = placed->pose;
        inst.bounds = placed->bounds;
        inst.material = sample_texture(ranges.texture_modes, assets, rng);
        layout.targets.push_back(std::move(inst));
        placed_bounds.push_back(layout.targets.back().bounds);
    }

    layout.objects_area = compute_objects_area(placed_bounds);
    layout.camera = sample_camera(layout.objects_area, ranges.camera, rng);

    double r_max = ranges.camera.radius_factor_max * coverage_radius(layout.objects_area, ranges.camera);
    SceneBox box = build_scene_box(layout.objects_area, r_max, ranges.scene_margin);
    layout.ground_side = box.ground_side;
    layout.wall_height = box.wall_height;

    if (!assets.background_images.empty())
        layout.background_image = assets.background_images[rng.uniform_int(
            static_cast<uint32_t>(assets.background_images.size()))];

    layout.lights = sample_lights(layout.objects_area, box, ranges.lights, rng);
    layout.distractors = sample_distractors(layout.objects_area, box, placed_bounds,
                                            ranges.distractors, ranges.texture_modes, assets, rng,
                                            &layout.distractor_failures, ranges.distractor_attempts);

    uint32_t next_id = 1;
    for (ObjectInstance& t : layout.targets) t.instance_id = next_id++;
    for (ObjectInstance& d : layout.distractors) d.instance_id = next_id++;
    return layout;
}

}  // namespace synthdr
