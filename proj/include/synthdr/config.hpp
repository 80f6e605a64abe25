#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthdr/postfx.hpp"
#include "synthdr/render.hpp"
#include "synthdr/sampler.hpp"

namespace synthdr {

using json = nlohmann::json;

struct GenerationConfig {
    uint64_t seed = 0;
    int image_count = 0;            // resolved; images_per_category * categories when set
    int images_per_category = 0;    // 0 = not set
    int width = 720;
    int height = 720;
    double split_ratio = 0.9;
    std::string output_dir;
    uint64_t min_visible_pixels = kDefaultMinVisiblePixels;

    double unit_scale = 1.0;
    std::vector<CatalogCategory> catalog;

    std::string background_dir;
    std::string object_image_dir;
    std::string material_dir;
    std::string material_filter;  // substring filter on material set names

    RenderSettings render;
    SamplerRanges sampler;
    PostFxConfig postfx;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::vector<std::string>& problems)
        : std::runtime_error(join(problems)), problems_(problems) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string out = "invalid configuration:";
        for (const std::string& p : problems) out += "\n  - " + p;
        return out;
    }
    std::vector<std::string> problems_;
};

namespace detail {

// Collects every problem before failing, so one round trip fixes them all.
struct ConfigCursor {
    std::vector<std::string>& errors;

    void unknown_keys(const json& obj, const std::string& ctx, std::set<std::string> allowed) {
        if (!obj.is_object()) return;
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!allowed.count(it.key()))
                errors.push_back(ctx + ": unknown key \"" + it.key() + "\"");
    }

    template <typename T>
    T get(const json& obj, const std::string& ctx, const std::string& key, T fallback) {
        if (!obj.is_object() || !obj.contains(key)) return fallback;
        try {
            return obj.at(key).get<T>();
        } catch (const json::exception&) {
            errors.push_back(ctx + "." + key + ": wrong type");
            return fallback;
        }
    }

    // [lo, hi] pair encoded as a two-element array.
    void get_range(const json& obj, const std::string& ctx, const std::string& key, double& lo,
                   double& hi) {
        if (!obj.is_object() || !obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            errors.push_back(ctx + "." + key + ": expected [min, max]");
            return;
        }
        lo = v[0].get<double>();
        hi = v[1].get<double>();
        if (lo > hi) errors.push_back(ctx + "." + key + ": min exceeds max");
    }

    void check(bool ok, const std::string& message) {
        if (!ok) errors.push_back(message);
    }
};

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
    if (p.empty()) return p;
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.lexically_normal().string()
                            : (base / fp).lexically_normal().string();
}

}  // namespace detail

// Parses and validates a configuration document. Relative paths resolve
// against base_dir (the config file's directory). Unknown keys are
// rejected; every violation is reported at once.
inline GenerationConfig parse_config(const json& root, const std::filesystem::path& base_dir,
                                     bool require_output = true) {
    std::vector<std::string> errors;
    detail::ConfigCursor c{errors};
    GenerationConfig cfg;

    c.unknown_keys(root, "config",
                   {"seed", "image_count", "images_per_category", "width", "height", "split_ratio",
                    "output_dir", "min_visible_pixels", "catalog", "assets", "render", "sampler",
                    "postfx"});

    cfg.seed = c.get<uint64_t>(root, "config", "seed", 0);
    cfg.image_count = c.get<int>(root, "config", "image_count", 0);
    cfg.images_per_category = c.get<int>(root, "config", "images_per_category", 0);
    cfg.width = c.get<int>(root, "config", "width", 720);
    cfg.height = c.get<int>(root, "config", "height", 720);
    cfg.split_ratio = c.get<double>(root, "config", "split_ratio", 0.9);
    cfg.output_dir = detail::resolve_path(c.get<std::string>(root, "config", "output_dir", ""), base_dir);
    cfg.min_visible_pixels = c.get<uint64_t>(root, "config", "min_visible_pixels",
                                             kDefaultMinVisiblePixels);

    // catalog
    if (root.contains("catalog")) {
        const json& cat = root.at("catalog");
        c.unknown_keys(cat, "catalog", {"unit_scale", "categories"});
        cfg.unit_scale = c.get<double>(cat, "catalog", "unit_scale", 1.0);
        if (cat.contains("categories")) {
            if (!cat.at("categories").is_array()) {
                errors.push_back("catalog.categories: expected an array");
            } else {
                int i = 0;
                for (const json& e : cat.at("categories")) {
                    std::string ctx = "catalog.categories[" + std::to_string(i++) + "]";
                    c.unknown_keys(e, ctx, {"name", "mesh", "scale"});
                    CatalogCategory entry;
                    entry.name = c.get<std::string>(e, ctx, "name", "");
                    entry.mesh_path = detail::resolve_path(c.get<std::string>(e, ctx, "mesh", ""), base_dir);
                    entry.scale = c.get<double>(e, ctx, "scale", 1.0);
                    c.check(!entry.name.empty(), ctx + ".name: required");
                    c.check(!entry.mesh_path.empty(), ctx + ".mesh: required");
                    c.check(entry.scale > 0.0, ctx + ".scale: must be positive");
                    cfg.catalog.push_back(std::move(entry));
                }
            }
        }
    }

    // assets
    if (root.contains("assets")) {
        const json& a = root.at("assets");
        c.unknown_keys(a, "assets",
                       {"background_images", "object_images", "materials", "material_filter"});
        cfg.background_dir = detail::resolve_path(c.get<std::string>(a, "assets", "background_images", ""), base_dir);
        cfg.object_image_dir = detail::resolve_path(c.get<std::string>(a, "assets", "object_images", ""), base_dir);
        cfg.material_dir = detail::resolve_path(c.get<std::string>(a, "assets", "materials", ""), base_dir);
        cfg.material_filter = c.get<std::string>(a, "assets", "material_filter", "");
    }

    // render
    if (root.contains("render")) {
        const json& r = root.at("render");
        c.unknown_keys(r, "render", {"backend", "samples_per_pixel", "max_depth", "exposure"});
        std::string backend = c.get<std::string>(r, "render", "backend", "path_traced");
        if (backend == "path_traced") cfg.render.backend = RenderBackend::path_traced;
        else if (backend == "rasterized") cfg.render.backend = RenderBackend::rasterized;
        else errors.push_back("render.backend: must be \"path_traced\" or \"rasterized\"");
        cfg.render.samples_per_pixel = c.get<int>(r, "render", "samples_per_pixel", 64);
        cfg.render.max_depth = c.get<int>(r, "render", "max_depth", 6);
        cfg.render.exposure = c.get<double>(r, "render", "exposure", 1.0);
    }

    // sampler
    if (root.contains("sampler")) {
        const json& s = root.at("sampler");
        c.unknown_keys(s, "sampler",
                       {"max_objects", "rotation_limits_deg", "placement_scale", "scene_margin",
                        "camera", "lights", "distractors", "texture_modes"});
        cfg.sampler.max_objects = c.get<int>(s, "sampler", "max_objects", 10);
        cfg.sampler.placement_scale = c.get<double>(s, "sampler", "placement_scale", 2.5);
        cfg.sampler.scene_margin = c.get<double>(s, "sampler", "scene_margin", 1.25);

        if (s.contains("rotation_limits_deg")) {
            const json& rl = s.at("rotation_limits_deg");
            c.unknown_keys(rl, "sampler.rotation_limits_deg", {"x", "y", "z"});
            cfg.sampler.rotation.x = deg_to_rad(c.get<double>(rl, "sampler.rotation_limits_deg", "x", 180.0));
            cfg.sampler.rotation.y = deg_to_rad(c.get<double>(rl, "sampler.rotation_limits_deg", "y", 180.0));
            cfg.sampler.rotation.z = deg_to_rad(c.get<double>(rl, "sampler.rotation_limits_deg", "z", 180.0));
        }
        if (s.contains("camera")) {
            const json& cam = s.at("camera");
            c.unknown_keys(cam, "sampler.camera",
                           {"theta_deg", "radius_factor", "focal_mm", "sensor_width_mm",
                            "look_at_shift_frac"});
            double theta_lo = 5.0, theta_hi = 85.0;
            c.get_range(cam, "sampler.camera", "theta_deg", theta_lo, theta_hi);
            cfg.sampler.camera.theta_min = deg_to_rad(theta_lo);
            cfg.sampler.camera.theta_max = deg_to_rad(theta_hi);
            c.get_range(cam, "sampler.camera", "radius_factor", cfg.sampler.camera.radius_factor_min,
                        cfg.sampler.camera.radius_factor_max);
            c.get_range(cam, "sampler.camera", "focal_mm", cfg.sampler.camera.focal_mm_min,
                        cfg.sampler.camera.focal_mm_max);
            cfg.sampler.camera.sensor_width_mm =
                c.get<double>(cam, "sampler.camera", "sensor_width_mm", 36.0);
            cfg.sampler.camera.look_at_shift_frac =
                c.get<double>(cam, "sampler.camera", "look_at_shift_frac", 0.1);
        }
        if (s.contains("lights")) {
            const json& li = s.at("lights");
            c.unknown_keys(li, "sampler.lights",
                           {"reference_area_m2", "max_count", "power_w", "size_m", "tilt_max_deg"});
            cfg.sampler.lights.reference_area_m2 =
                c.get<double>(li, "sampler.lights", "reference_area_m2", 25.0);
            cfg.sampler.lights.max_count = c.get<int>(li, "sampler.lights", "max_count", 6);
            c.get_range(li, "sampler.lights", "power_w", cfg.sampler.lights.power_min_w,
                        cfg.sampler.lights.power_max_w);
            c.get_range(li, "sampler.lights", "size_m", cfg.sampler.lights.size_min_m,
                        cfg.sampler.lights.size_max_m);
            cfg.sampler.lights.tilt_max =
                deg_to_rad(c.get<double>(li, "sampler.lights", "tilt_max_deg", 30.0));
        }
        if (s.contains("distractors")) {
            const json& d = s.at("distractors");
            c.unknown_keys(d, "sampler.distractors", {"max_count", "scale"});
            cfg.sampler.distractors.max_count = c.get<int>(d, "sampler.distractors", "max_count", 8);
            c.get_range(d, "sampler.distractors", "scale", cfg.sampler.distractors.scale_min,
                        cfg.sampler.distractors.scale_max);
        }
        if (s.contains("texture_modes")) {
            const json& t = s.at("texture_modes");
            c.unknown_keys(t, "sampler.texture_modes", {"solid", "image", "pbr", "pbr_jitter"});
            cfg.sampler.texture_modes.p_solid = c.get<double>(t, "sampler.texture_modes", "solid", 0.0);
            cfg.sampler.texture_modes.p_image = c.get<double>(t, "sampler.texture_modes", "image", 0.0);
            cfg.sampler.texture_modes.p_pbr = c.get<double>(t, "sampler.texture_modes", "pbr", 0.0);
            cfg.sampler.texture_modes.pbr_jitter =
                c.get<double>(t, "sampler.texture_modes", "pbr_jitter", 0.0);
        }
    }

    // postfx
    if (root.contains("postfx")) {
        const json& p = root.at("postfx");
        c.unknown_keys(p, "postfx",
                       {"noise_probability", "noise_amount", "blur_probability", "blur_sigma"});
        cfg.postfx.noise_probability = c.get<double>(p, "postfx", "noise_probability", 0.1);
        cfg.postfx.blur_probability = c.get<double>(p, "postfx", "blur_probability", 0.1);
        c.get_range(p, "postfx", "noise_amount", cfg.postfx.noise_amount_min,
                    cfg.postfx.noise_amount_max);
        c.get_range(p, "postfx", "blur_sigma", cfg.postfx.blur_sigma_min, cfg.postfx.blur_sigma_max);
    }

    // ----- cross-field validation -----
    namespace fs = std::filesystem;

    c.check(!cfg.catalog.empty(), "catalog.categories: at least one category required");
    std::set<std::string> names;
    for (const CatalogCategory& e : cfg.catalog) {
        if (!e.name.empty() && !names.insert(e.name).second)
            errors.push_back("catalog.categories: duplicate name \"" + e.name + "\"");
        if (!e.mesh_path.empty() && !fs::exists(e.mesh_path))
            errors.push_back("catalog mesh not found: " + e.mesh_path);
    }
    c.check(cfg.unit_scale > 0.0, "catalog.unit_scale: must be positive");

    if (cfg.images_per_category > 0 && cfg.image_count > 0)
        errors.push_back("image_count and images_per_category are mutually exclusive");
    if (cfg.images_per_category > 0)
        cfg.image_count = cfg.images_per_category * static_cast<int>(cfg.catalog.size());
    c.check(cfg.image_count >= 1, "image_count: must be at least 1");
    c.check(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0, "split_ratio: must be in (0, 1)");
    c.check(cfg.width >= 64 && cfg.height >= 64, "width/height: must be at least 64");
    if (require_output) c.check(!cfg.output_dir.empty(), "output_dir: required");
    c.check(cfg.min_visible_pixels >= 1, "min_visible_pixels: must be at least 1");

    c.check(cfg.render.samples_per_pixel >= 1, "render.samples_per_pixel: must be at least 1");
    c.check(cfg.render.max_depth >= 1, "render.max_depth: must be at least 1");

    const SamplerRanges& sr = cfg.sampler;
    c.check(sr.max_objects >= 0, "sampler.max_objects: must be >= 0");
    c.check(sr.max_objects + sr.distractors.max_count <= 255,
            "sampler: max_objects + distractors.max_count must be <= 255 (8-bit mask ids)");
    c.check(sr.camera.theta_min > 0.0 && sr.camera.theta_max <= kPi / 2.0 + 1e-12 &&
                sr.camera.theta_min <= sr.camera.theta_max,
            "sampler.camera.theta_deg: range must lie in (0, 90]");
    c.check(sr.camera.radius_factor_min > 0.0, "sampler.camera.radius_factor: must be positive");
    c.check(sr.camera.focal_mm_min > 0.0, "sampler.camera.focal_mm: must be positive");
    c.check(sr.camera.sensor_width_mm > 0.0, "sampler.camera.sensor_width_mm: must be positive");
    c.check(sr.camera.look_at_shift_frac >= 0.0, "sampler.camera.look_at_shift_frac: must be >= 0");
    c.check(sr.scene_margin >= 1.0, "sampler.scene_margin: must be >= 1");
    c.check(sr.placement_scale > 0.0, "sampler.placement_scale: must be positive");
    c.check(sr.lights.reference_area_m2 > 0.0, "sampler.lights.reference_area_m2: must be positive");
    c.check(sr.lights.max_count >= 1, "sampler.lights.max_count: must be at least 1");
    c.check(sr.lights.power_min_w > 0.0, "sampler.lights.power_w: must be positive");
    c.check(sr.lights.size_min_m > 0.0, "sampler.lights.size_m: must be positive");
    c.check(sr.distractors.max_count >= 0, "sampler.distractors.max_count: must be >= 0");
    c.check(sr.distractors.scale_min > 0.0, "sampler.distractors.scale: must be positive");

    const TextureModePolicy& tm = sr.texture_modes;
    c.check(tm.p_solid >= 0.0 && tm.p_image >= 0.0 && tm.p_pbr >= 0.0,
            "sampler.texture_modes: probabilities must be >= 0");
    c.check(tm.p_solid + tm.p_image + tm.p_pbr > 0.0,
            "sampler.texture_modes: at least one mode must have positive probability");
    c.check(tm.pbr_jitter >= 0.0, "sampler.texture_modes.pbr_jitter: must be >= 0");

    // Configured asset directories must exist; whether an active texture
    // mode has the assets it needs is checked at generation start
    // (load_assets), before any output file is written.
    if (!cfg.object_image_dir.empty() && !fs::is_directory(cfg.object_image_dir))
        errors.push_back("assets.object_images: not a directory: " + cfg.object_image_dir);
    if (!cfg.material_dir.empty() && !fs::is_directory(cfg.material_dir))
        errors.push_back("assets.materials: not a directory: " + cfg.material_dir);
    if (!cfg.background_dir.empty() && !fs::is_directory(cfg.background_dir))
        errors.push_back("assets.background_images: not a directory: " + cfg.background_dir);

    const PostFxConfig& pf = cfg.postfx;
    c.check(pf.noise_probability >= 0.0 && pf.noise_probability <= 1.0,
            "postfx.noise_probability: must be in [0, 1]");
    c.check(pf.blur_probability >= 0.0 && pf.blur_probability <= 1.0,
            "postfx.blur_probability: must be in [0, 1]");
    c.check(pf.noise_amount_min >= 0.0 && pf.noise_amount_max <= 1.0,
            "postfx.noise_amount: must lie in [0, 1]");
    c.check(pf.blur_sigma_min > 0.0, "postfx.blur_sigma: must be positive");

    if (!errors.empty()) throw ConfigError(errors);
    return cfg;
}

inline GenerationConfig load_config(const std::string& path, bool require_output = true) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config file");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return parse_config(root, std::filesystem::path(path).parent_path(), require_output);
}

// Canonical echo with every default filled in; the digest hashes this with
// output_dir removed so runs into different directories stay comparable.
inline json config_to_json(const GenerationConfig& cfg) {
    json cat_entries = json::array();
    for (const CatalogCategory& e : cfg.catalog)
        cat_entries.push_back({{"name", e.name}, {"mesh", e.mesh_path}, {"scale", e.scale}});
    return json{
        {"seed", cfg.seed},
        {"image_count", cfg.image_count},
        {"width", cfg.width},
        {"height", cfg.height},
        {"split_ratio", cfg.split_ratio},
        {"output_dir", cfg.output_dir},
        {"min_visible_pixels", cfg.min_visible_pixels},
        {"catalog", {{"unit_scale", cfg.unit_scale}, {"categories", cat_entries}}},
        {"assets",
         {{"background_images", cfg.background_dir},
          {"object_images", cfg.object_image_dir},
          {"materials", cfg.material_dir},
          {"material_filter", cfg.material_filter}}},
        {"render",
         {{"backend", cfg.render.backend == RenderBackend::path_traced ? "path_traced" : "rasterized"},
          {"samples_per_pixel", cfg.render.samples_per_pixel},
          {"max_depth", cfg.render.max_depth},
          {"exposure", cfg.render.exposure}}},
        {"sampler",
         {{"max_objects", cfg.sampler.max_objects},
          {"rotation_limits_deg",
           {{"x", rad_to_deg(cfg.sampler.rotation.x)},
            {"y", rad_to_deg(cfg.sampler.rotation.y)},
            {"z", rad_to_deg(cfg.sampler.rotation.z)}}},
          {"placement_scale", cfg.sampler.placement_scale},
          {"scene_margin", cfg.sampler.scene_margin},
          {"camera",
           {{"theta_deg", {rad_to_deg(cfg.sampler.camera.theta_min), rad_to_deg(cfg.sampler.camera.theta_max)}},
            {"radius_factor", {cfg.sampler.camera.radius_factor_min, cfg.sampler.camera.radius_factor_max}},
            {"focal_mm", {cfg.sampler.camera.focal_mm_min, cfg.sampler.camera.focal_mm_max}},
            {"sensor_width_mm", cfg.sampler.camera.sensor_width_mm},
            {"look_at_shift_frac", cfg.sampler.camera.look_at_shift_frac}}},
          {"lights",
           {{"reference_area_m2", cfg.sampler.lights.reference_area_m2},
            {"max_count", cfg.sampler.lights.max_count},
            {"power_w", {cfg.sampler.lights.power_min_w, cfg.sampler.lights.power_max_w}},
            {"size_m", {cfg.sampler.lights.size_min_m, cfg.sampler.lights.size_max_m}},
            {"tilt_max_deg", rad_to_deg(cfg.sampler.lights.tilt_max)}}},
          {"distractors",
           {{"max_count", cfg.sampler.distractors.max_count},
            {"scale", {cfg.sampler.distractors.scale_min, cfg.sampler.distractors.scale_max}}}},
          {"texture_modes",
           {{"solid", cfg.sampler.texture_modes.p_solid},
            {"image", cfg.sampler.texture_modes.p_image},
            {"pbr", cfg.sampler.texture_modes.p_pbr},
            {"pbr_jitter", cfg.sampler.texture_modes.pbr_jitter}}}}},
        {"postfx",
         {{"noise_probability", cfg.postfx.noise_probability},
          {"noise_amount", {cfg.postfx.noise_amount_min, cfg.postfx.noise_amount_max}},
          {"blur_probability", cfg.postfx.blur_probability},
          {"blur_sigma", {cfg.postfx.blur_sigma_min, cfg.postfx.blur_sigma_max}}}}};
}

inline uint64_t fnv1a64(const void* data, size_t size, uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_digest(const GenerationConfig& cfg) {
    json echo = config_to_json(cfg);
    echo.erase("output_dir");
    std::string canon = echo.dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon.data(), canon.size())));
    return buf;
}

}  // namespace synthdr
