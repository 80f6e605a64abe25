#pragma once

#include <mutex>
#include <unordered_map>

#include "synthdr/bvh.hpp"
#include "synthdr/sampler.hpp"
#include "synthdr/texture.hpp"

namespace synthdr {

// Thread-safe, path-keyed texture loader shared across scene builds.
class TextureCache {
public:
    std::shared_ptr<const TextureImage> get(const std::string& path, bool srgb = true) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(path);
        if (it != cache_.end()) return it->second;
        auto tex = std::make_shared<TextureImage>(load_texture(path, srgb));
        cache_[path] = tex;
        return tex;
    }

private:
    std::mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<const TextureImage>> cache_;
};

struct SceneInstance {
    TriangleMesh mesh;  // world space
    ResolvedMaterial material;
    uint16_t id = 0;        // id-pass value; 0 for walls, distractors, lights
    int light_index = -1;   // >= 0 when this instance realizes an area light
};

struct Scene {
    std::vector<SceneInstance> instances;
    std::vector<AreaLight> lights;
    Bvh bvh;

    void finalize() {
        std::vector<TriangleMesh> meshes;
        meshes.reserve(instances.size());
        for (const SceneInstance& inst : instances) meshes.push_back(inst.mesh);
        bvh = build_bvh(meshes);
    }
};

// Interpolated hit data ready for shading.
struct SurfacePoint {
    Vec3 position;
    Vec3 shading_normal;  // faces the incoming ray
    Vec3 geom_normal;     // triangle plane normal, faces the incoming ray
    ShadingParams params;
    Vec3 emission;        // radiance toward the ray; zero off the lit side
    const SceneInstance* instance = nullptr;
};

inline SurfacePoint evaluate_hit(const Scene& scene, const Ray& ray, const Hit& hit) {
    const SceneInstance& inst = scene.instances[hit.instance];
    const auto& tri = inst.mesh.triangles[hit.triangle];
    const Vec3& p0 = inst.mesh.vertices[tri[0]];
    const Vec3& p1 = inst.mesh.vertices[tri[1]];
    const Vec3& p2 = inst.mesh.vertices[tri[2]];
    double w0 = 1.0 - hit.u - hit.v;

    SurfacePoint sp;
    sp.instance = &inst;
    sp.position = p0 * w0 + p1 * hit.u + p2 * hit.v;

    Vec3 ng = normalize(cross(p1 - p0, p2 - p0));
    Vec3 ns = inst.mesh.normals.empty()
                  ? ng
                  : normalize(inst.mesh.normals[tri[0]] * w0 + inst.mesh.normals[tri[1]] * hit.u +
                              inst.mesh.normals[tri[2]] * hit.v);

    // One-sided emission, evaluated against the authored normal.
    if (inst.material.emissive() && dot(ns, ray.dir) < 0.0) sp.emission = inst.material.emission;

    // Two-sided shading for reflectance.
    if (dot(ng, ray.dir) > 0.0) ng = -ng;
    if (dot(ns, ray.dir) > 0.0) ns = -ns;
    sp.geom_normal = ng;
    sp.shading_normal = ns;

    sp.params.albedo = inst.material.albedo_at(sp.position, ns);
    sp.params.metalness = inst.material.metalness;
    sp.params.roughness = std::max(inst.material.roughness, kRoughnessFloor);
    sp.params.diffuse_only = inst.material.diffuse_only;
    return sp;
}

// ---------------------------------------------------------------------------
// Scene construction from a sampled layout.

namespace detail {

// Ground sits a hair below z=0 so object bottom faces never tie with it in
// the depth test.
inline constexpr double kGroundOffset = -1e-6;

inline ResolvedMaterial resolve_material(const MaterialSpec& spec, TextureCache& textures) {
    ResolvedMaterial m;
    switch (spec.mode) {
        case TextureMode::solid:
            m.albedo_constant = spec.solid_color;
            m.metalness = 0.0;
            m.roughness = 0.6;
            break;
        case TextureMode::image:
            m.albedo_map = textures.get(spec.image_path);
            m.tiling_scale = spec.tiling_scale;
            m.metalness = 0.0;
            m.roughness = 0.6;
            break;
        case TextureMode::pbr:
            if (!spec.albedo_map_path.empty()) m.albedo_map = textures.get(spec.albedo_map_path);
            m.albedo_constant = spec.albedo_constant;
            m.tiling_scale = spec.tiling_scale;
            m.metalness = spec.metalness;
            m.roughness = spec.roughness;
            break;
    }
    return m;
}

inline TriangleMesh make_scene_box_mesh(const Vec3& center, double side, double height) {
    double h = side / 2.0;
    double x0 = center.x - h, x1 = center.x + h;
    double y0 = center.y - h, y1 = center.y + h;
    double z0 = kGroundOffset, z1 = height;
    TriangleMesh m;
    m.vertices = {{x0, y0, z0}, {x1, y0, z0}, {x1, y1, z0}, {x0, y1, z0},
                  {x0, y0, z1}, {x1, y0, z1}, {x1, y1, z1}, {x0, y1, z1}};
    // Ground (+z up) and four walls with inward normals.
    m.triangles = {{0, 1, 2}, {0, 2, 3},   // ground
                   {0, 4, 5}, {0, 5, 1},   // y = y0 wall
                   {2, 6, 7}, {2, 7, 3},   // y = y1 wall
                   {1, 5, 6}, {1, 6, 2},   // x = x1 wall
                   {3, 7, 4}, {3, 4, 0}};  // x = x0 wall
    compute_vertex_normals(m);
    return m;
}

inline TriangleMesh make_light_mesh(const AreaLight& light) {
    Vec3 du = light.edge_u * light.half_u;
    Vec3 dv = light.edge_v * light.half_v;
    TriangleMesh m;
    m.vertices = {light.center - du - dv, light.center + du - dv, light.center + du + dv,
                  light.center - du + dv};
    // Wind so the face normal equals the emission normal.
    Vec3 face = normalize(cross(m.vertices[1] - m.vertices[0], m.vertices[3] - m.vertices[0]));
    if (dot(face, light.normal) > 0.0) m.triangles = {{0, 1, 2}, {0, 2, 3}};
    else m.triangles = {{0, 2, 1}, {0, 3, 2}};
    m.normals.assign(4, light.normal);
    return m;
}

}  // namespace detail

// Builds the renderable scene: placed targets and distractors, the ground
// box, and one emissive rectangle per area light.
inline Scene build_scene(const SceneLayout& layout, const LoadedCatalog& catalog,
                         TextureCache& textures, bool include_box = true) {
    Scene scene;

    for (const ObjectInstance& t : layout.targets) {
        SceneInstance inst;
        inst.mesh = transform_mesh(*catalog.meshes[t.category], t.pose);
        inst.material = detail::resolve_material(t.material, textures);
        inst.id = static_cast<uint16_t>(t.instance_id);
        scene.instances.push_back(std::move(inst));
    }
    for (const ObjectInstance& d : layout.distractors) {
        SceneInstance inst;
        inst.mesh = transform_mesh(make_primitive(d.shape), d.pose);
        inst.material = detail::resolve_material(d.material, textures);
        inst.id = 0;
        scene.instances.push_back(std::move(inst));
    }

    if (include_box) {
        SceneInstance box;
        box.mesh = detail::make_scene_box_mesh(layout.objects_area.center(), layout.ground_side,
                                               layout.wall_height);
        if (!layout.background_image.empty()) {
            box.material.albedo_map = textures.get(layout.background_image);
            // One texture repeat across the ground plane.
            box.material.tiling_scale = layout.ground_side;
        } else {
            box.material.albedo_constant = {0.5, 0.5, 0.5};
        }
        box.material.metalness = 0.0;
        box.material.roughness = 0.8;
        box.id = 0;
        scene.instances.push_back(std::move(box));
    }

    scene.lights = layout.lights;
    for (size_t i = 0; i < layout.lights.size(); ++i) {
        const AreaLight& light = layout.lights[i];
        SceneInstance inst;
        inst.mesh = detail::make_light_mesh(light);
        inst.material.albedo_constant = {0, 0, 0};
        inst.material.roughness = 1.0;
        inst.material.emission = light.radiance();
        inst.id = 0;
        inst.light_index = static_cast<int>(i);
        scene.instances.push_back(std::move(inst));
    }

    scene.finalize();
    return scene;
}

}  // namespace synthdr
