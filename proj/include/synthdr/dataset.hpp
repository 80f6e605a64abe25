#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "synthdr/annotate.hpp"
#include "synthdr/config.hpp"
#include "synthdr/mesh_io.hpp"
#include "synthdr/postfx.hpp"
#include "synthdr/raster.hpp"

namespace synthdr {

// ---------------------------------------------------------------------------
// Catalog and asset loading (fail-fast: nothing is written until these pass).

inline LoadedCatalog load_catalog(const GenerationConfig& cfg) {
    LoadedCatalog catalog;
    for (const CatalogCategory& entry : cfg.catalog) {
        CatalogCategory scaled = entry;
        scaled.scale = entry.scale * cfg.unit_scale;
        catalog.categories.push_back(scaled);
        catalog.meshes.push_back(std::make_shared<TriangleMesh>(load_mesh(entry.mesh_path)));
    }
    return catalog;
}

namespace detail {

inline std::vector<std::string> list_image_files(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> out;
    if (dir.empty() || !fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

inline AssetPools load_assets(const GenerationConfig& cfg) {
    AssetPools pools;
    pools.background_images = detail::list_image_files(cfg.background_dir);
    pools.object_images = detail::list_image_files(cfg.object_image_dir);
    if (!cfg.material_dir.empty()) {
        std::vector<std::string> errors;
        std::vector<MaterialSpec> all = load_material_library(cfg.material_dir, &errors);
        for (const std::string& e : errors) std::cerr << "material library: " << e << " (skipped)\n";
        for (MaterialSpec& m : all)
            if (cfg.material_filter.empty() || m.name.find(cfg.material_filter) != std::string::npos)
                pools.materials.push_back(std::move(m));
    }
    if (cfg.sampler.texture_modes.p_image > 0.0 && pools.object_images.empty())
        throw std::runtime_error(
            "texture mode \"image\" is active but assets.object_images " +
            (cfg.object_image_dir.empty() ? std::string("is not configured")
                                          : cfg.object_image_dir + " contains no images"));
    if (cfg.sampler.texture_modes.p_pbr > 0.0 && pools.materials.empty())
        throw std::runtime_error("texture mode \"pbr\" is active but no material sets loaded from " +
                                 cfg.material_dir +
                                 (cfg.material_filter.empty() ? "" : " (filter \"" + cfg.material_filter + "\")"));
    return pools;
}

// ---------------------------------------------------------------------------
// Train/val split: uniform random permutation, first ceil(ratio*N) train.

inline std::vector<std::string> plan_split(size_t image_count, double ratio, Rng& rng) {
    std::vector<uint32_t> perm(image_count);
    for (size_t i = 0; i < image_count; ++i) perm[i] = static_cast<uint32_t>(i);
    shuffle(perm, rng);
    size_t train_count = static_cast<size_t>(std::ceil(ratio * static_cast<double>(image_count)));
    std::vector<std::string> split(image_count, "val");
    for (size_t i = 0; i < train_count && i < image_count; ++i) split[perm[i]] = "train";
    return split;
}

// Applies split assignments to an existing manifest (the orchestrator plans
// the split up front so files land in their final directories).
inline json split_dataset(json manifest, double ratio, Rng& rng) {
    json& images = manifest.at("images");
    std::vector<std::string> split = plan_split(images.size(), ratio, rng);
    for (size_t i = 0; i < images.size(); ++i) images[i]["split"] = split[i];
    return manifest;
}

// ---------------------------------------------------------------------------
// Per-image pipeline: sample -> render -> id pass -> tone map -> postfx ->
// annotate -> write. Everything derives from (seed, image index) substreams.

namespace detail {

inline json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline std::string image_basename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img_%06d", index);
    return buf;
}

struct GeneratedImage {
    json entry;
};

inline json scene_summary(const SceneLayout& layout, const LoadedCatalog& catalog,
                          const std::vector<bool>& labeled) {
    json instances = json::array();
    for (size_t i = 0; i < layout.targets.size(); ++i) {
        const ObjectInstance& t = layout.targets[i];
        instances.push_back({{"id", t.instance_id},
                             {"kind", "target"},
                             {"category", catalog.categories[t.category].name},
                             {"class_index", t.category},
                             {"labeled", labeled[i]},
                             {"translation", vec_to_json(t.pose.translation)},
                             {"rotation", vec_to_json(t.pose.rotation)},
                             {"scale", t.pose.scale},
                             {"texture_mode", texture_mode_name(t.material.mode)}});
    }
    for (const ObjectInstance& d : layout.distractors) {
        instances.push_back({{"id", d.instance_id},
                             {"kind", "distractor"},
                             {"shape", primitive_name(d.shape)},
                             {"translation", vec_to_json(d.pose.translation)},
                             {"rotation", vec_to_json(d.pose.rotation)},
                             {"scale", d.pose.scale},
                             {"texture_mode", texture_mode_name(d.material.mode)}});
    }
    return json{{"instances", instances},
                {"camera",
                 {{"r", layout.camera.r},
                  {"theta", layout.camera.theta},
                  {"phi", layout.camera.phi},
                  {"position", vec_to_json(layout.camera.position)},
                  {"look_at", vec_to_json(layout.camera.look_at)},
                  {"focal_mm", layout.camera.focal_length_mm}}},
                {"lights", layout.lights.size()},
                {"ground_side", layout.ground_side},
                {"wall_height", layout.wall_height},
                {"background", layout.background_image},
                {"placement_failures", layout.placement_failures},
                {"distractor_failures", layout.distractor_failures}};
}

}  // namespace detail

// In-memory result of the per-image pipeline (shared by generation,
// preview, and the acceptance suite so they are byte-identical).
struct ImageArtifacts {
    SceneLayout layout;
    ImageRgb8 image;    // tone-mapped, post-processed
    IdBuffer ids;
    PostFxResult postfx;
    std::vector<YoloRecord> records;
    std::vector<bool> labeled;  // parallel to layout.targets
};

inline ImageArtifacts produce_image(const GenerationConfig& cfg, const LoadedCatalog& catalog,
                                    const AssetPools& assets, TextureCache& textures, int index,
                                    std::optional<RenderBackend> backend_override = std::nullopt,
                                    int render_threads = 1) {
    Rng scene_rng = image_stream(cfg.seed, index, StreamPurpose::scene);

    SamplerRanges ranges = cfg.sampler;
    ranges.camera.image_width = cfg.width;
    ranges.camera.image_height = cfg.height;

    ImageArtifacts art;
    art.layout = sample_scene(catalog, assets, ranges, scene_rng);
    Scene scene = build_scene(art.layout, catalog, textures);

    RenderSettings rs = cfg.render;
    rs.seed = cfg.seed;
    rs.threads = render_threads;
    RenderBackend backend = backend_override.value_or(cfg.render.backend);

    RenderBuffer hdr = backend == RenderBackend::path_traced
                           ? render_pathtraced(scene, art.layout.camera, rs,
                                               static_cast<uint64_t>(index))
                           : render_rasterized(scene, art.layout.camera, rs);
    art.ids = render_id_pass(scene, art.layout.camera);
    art.image = tone_map(hdr, cfg.render.exposure);

    Rng postfx_rng = image_stream(cfg.seed, index, StreamPurpose::postfx);
    art.image = apply_postfx(art.image, cfg.postfx, postfx_rng, &art.postfx);

    std::vector<LabeledInstance> instances;
    for (const ObjectInstance& t : art.layout.targets)
        instances.push_back({t.instance_id, static_cast<int>(t.category)});
    art.records = annotate_image(art.ids, instances, cfg.min_visible_pixels);

    art.labeled.assign(art.layout.targets.size(), false);
    std::vector<InstanceMask> masks =
        masks_from_id_pass(art.ids, static_cast<uint32_t>(art.layout.targets.size()));
    for (size_t i = 0; i < art.layout.targets.size(); ++i)
        art.labeled[i] = masks[art.layout.targets[i].instance_id - 1].count >= cfg.min_visible_pixels;
    return art;
}

namespace detail {

inline GeneratedImage generate_one_image(const GenerationConfig& cfg, const LoadedCatalog& catalog,
                                         const AssetPools& assets, TextureCache& textures,
                                         int index, const std::string& split,
                                         const std::filesystem::path& out_root) {
    ImageArtifacts art = produce_image(cfg, catalog, assets, textures, index);
    const SceneLayout& layout = art.layout;
    const PostFxResult& fx = art.postfx;
    const std::vector<YoloRecord>& records = art.records;
    const std::vector<bool>& labeled = art.labeled;
    const ImageRgb8& image = art.image;
    const IdBuffer& ids = art.ids;

    std::string base = image_basename(index);
    std::string image_rel = "images/" + split + "/" + base + ".png";
    std::string label_rel = "labels/" + split + "/" + base + ".txt";
    std::string mask_rel = "masks/" + base + ".png";

    write_png_rgb8((out_root / image_rel).string(), image);
    write_labels(records, (out_root / label_rel).string());
    write_mask_png((out_root / mask_rel).string(), ids);

    GeneratedImage result;
    result.entry = {{"index", index},
                    {"image", image_rel},
                    {"label", label_rel},
                    {"mask", mask_rel},
                    {"split", split},
                    {"seed", splitmix64(cfg.seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)))},
                    {"status", "ok"},
                    {"labels", records.size()},
                    {"postfx",
                     {{"blur_applied", fx.blur_applied},
                      {"blur_sigma", fx.blur_sigma},
                      {"noise_applied", fx.noise_applied},
                      {"noise_amount", fx.noise_amount}}},
                    {"scene", scene_summary(layout, catalog, labeled)}};
    return result;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset descriptor in the key-value layout detector tooling expects.

inline void write_descriptor(const json& manifest, const std::filesystem::path& out_root,
                             std::vector<std::string>* warnings = nullptr) {
    size_t val_count = 0;
    for (const json& e : manifest.at("images"))
        if (e.value("status", "") == "ok" && e.value("split", "") == "val") ++val_count;

    std::string val_dir = "images/val";
    if (val_count == 0) {
        val_dir = "images/train";  // tooling needs a non-empty val set
        if (warnings) warnings->push_back("validation split is empty; descriptor points val at train");
    }

    std::ostringstream os;
    os << "path: .\n";
    os << "train: images/train\n";
    os << "val: " << val_dir << "\n";
    const json& categories = manifest.at("categories");
    os << "nc: " << categories.size() << "\n";
    os << "names:\n";
    for (size_t i = 0; i < categories.size(); ++i)
        os << "  " << i << ": " << categories[i].get<std::string>() << "\n";

    std::ofstream out(out_root / "dataset.yaml", std::ios::binary);
    if (!out) throw std::runtime_error((out_root / "dataset.yaml").string() + ": cannot write");
    out << os.str();
}

// ---------------------------------------------------------------------------
// Orchestrator.

struct GenerateOptions {
    int threads = 1;
    std::function<void(int done, int total)> progress;
};

inline json generate_dataset(const GenerationConfig& cfg, const GenerateOptions& opt = {}) {
    namespace fs = std::filesystem;

    LoadedCatalog catalog = load_catalog(cfg);
    AssetPools assets = load_assets(cfg);
    TextureCache textures;

    Rng split_rng = make_stream(cfg.seed, ~0ULL);
    std::vector<std::string> split = plan_split(cfg.image_count, cfg.split_ratio, split_rng);

    std::vector<std::string> warnings;
    if (std::none_of(split.begin(), split.end(), [](const std::string& s) { return s == "val"; }))
        warnings.push_back("split produced no validation images (image_count too small for ratio)");

    fs::path out_root(cfg.output_dir);
    for (const char* sub : {"images/train", "images/val", "labels/train", "labels/val", "masks"})
        fs::create_directories(out_root / sub);

    std::vector<json> entries(cfg.image_count);
    std::atomic<int> next{0};
    std::atomic<int> done{0};

    auto worker = [&] {
        for (int i = next.fetch_add(1); i < cfg.image_count; i = next.fetch_add(1)) {
            try {
                entries[i] = detail::generate_one_image(cfg, catalog, assets, textures, i, split[i],
                                                        out_root).entry;
            } catch (const std::exception& e) {
                entries[i] = {{"index", i}, {"status", std::string("failed: ") + e.what()},
                              {"split", split[i]}};
            }
            int d = done.fetch_add(1) + 1;
            if (opt.progress) opt.progress(d, cfg.image_count);
        }
    };

    int threads = std::max(1, opt.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    json categories = json::array();
    for (const CatalogCategory& c : catalog.categories) categories.push_back(c.name);

    json config_echo = config_to_json(cfg);
    config_echo.erase("output_dir");  // keeps reruns into different roots byte-identical

    json manifest{{"config", config_echo},
                  {"config_digest", config_digest(cfg)},
                  {"seed", cfg.seed},
                  {"categories", categories},
                  {"warnings", warnings},
                  {"images", entries}};

    std::ofstream out(out_root / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error((out_root / "manifest.json").string() + ": cannot write manifest");
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error((out_root / "manifest.json").string() + ": manifest write failed");

    write_descriptor(manifest, out_root, &warnings);
    return manifest;
}

inline json load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open manifest");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Dataset statistics.

struct StatsReport {
    uint64_t image_count = 0;
    uint64_t ok_count = 0;
    uint64_t failed_count = 0;
    std::vector<std::pair<std::string, uint64_t>> per_class;  // labeled instances
    std::map<int, uint64_t> objects_per_image;                // labeled targets per image
    double noise_rate = 0.0;
    double blur_rate = 0.0;
    std::map<std::string, uint64_t> texture_modes;
    std::vector<uint64_t> theta_histogram = std::vector<uint64_t>(9, 0);  // 10-degree bins
    double r_min = 0.0, r_max = 0.0, r_mean = 0.0;
    uint64_t train_count = 0, val_count = 0;
};

inline StatsReport dataset_stats(const json& manifest) {
    StatsReport report;
    const json& categories = manifest.at("categories");
    std::map<std::string, uint64_t> class_counts;
    for (const json& c : categories) class_counts[c.get<std::string>()] = 0;

    uint64_t noise_applied = 0, blur_applied = 0;
    double r_sum = 0.0;
    report.r_min = std::numeric_limits<double>::max();
    report.r_max = 0.0;

    for (const json& e : manifest.at("images")) {
        ++report.image_count;
        if (e.value("status", "") != "ok") {
            ++report.failed_count;
            continue;
        }
        ++report.ok_count;
        if (e.value("split", "") == "train") ++report.train_count;
        else ++report.val_count;

        if (e.at("postfx").value("noise_applied", false)) ++noise_applied;
        if (e.at("postfx").value("blur_applied", false)) ++blur_applied;

        const json& scene = e.at("scene");
        int labeled_targets = 0;
        for (const json& inst : scene.at("instances")) {
            std::string mode = inst.value("texture_mode", "?");
            ++report.texture_modes[mode];
            if (inst.value("kind", "") != "target") continue;
            if (inst.value("labeled", false)) {
                ++labeled_targets;
                ++class_counts[inst.value("category", "?")];
            }
        }
        ++report.objects_per_image[labeled_targets];

        double theta = scene.at("camera").value("theta", 0.0);
        int bin = std::clamp(static_cast<int>(rad_to_deg(theta) / 10.0), 0, 8);
        ++report.theta_histogram[bin];
        double r = scene.at("camera").value("r", 0.0);
        report.r_min = std::min(report.r_min, r);
        report.r_max = std::max(report.r_max, r);
        r_sum += r;
    }
    if (report.ok_count > 0) {
        report.noise_rate = static_cast<double>(noise_applied) / report.ok_count;
        report.blur_rate = static_cast<double>(blur_applied) / report.ok_count;
        report.r_mean = r_sum / static_cast<double>(report.ok_count);
    } else {
        report.r_min = 0.0;
    }
    for (const json& c : categories) {
        std::string name = c.get<std::string>();
        report.per_class.emplace_back(name, class_counts[name]);
    }
    return report;
}

inline json stats_to_json(const StatsReport& r) {
    json per_class = json::object();
    for (const auto& [name, count] : r.per_class) per_class[name] = count;
    json objects = json::object();
    for (const auto& [k, v] : r.objects_per_image) objects[std::to_string(k)] = v;
    json modes = json::object();
    for (const auto& [k, v] : r.texture_modes) modes[k] = v;
    return json{{"image_count", r.image_count},
                {"ok", r.ok_count},
                {"failed", r.failed_count},
                {"train", r.train_count},
                {"val", r.val_count},
                {"per_class_instances", per_class},
                {"objects_per_image", objects},
                {"noise_rate", r.noise_rate},
                {"blur_rate", r.blur_rate},
                {"texture_modes", modes},
                {"camera_theta_histogram_10deg", r.theta_histogram},
                {"camera_r", {{"min", r.r_min}, {"max", r.r_max}, {"mean", r.r_mean}}}};
}

inline std::string format_stats_table(const StatsReport& r) {
    std::ostringstream os;
    char line[160];
    os << "images: " << r.image_count << " (ok " << r.ok_count << ", failed " << r.failed_count
       << ", train " << r.train_count << ", val " << r.val_count << ")\n";
    std::snprintf(line, sizeof line, "postfx rates: noise %.4f  blur %.4f\n", r.noise_rate,
                  r.blur_rate);
    os << line;
    os << "per-class labeled instances:\n";
    for (const auto& [name, count] : r.per_class) {
        std::snprintf(line, sizeof line, "  %-20s %8llu\n", name.c_str(),
                      static_cast<unsigned long long>(count));
        os << line;
    }
    os << "labeled objects per image:\n";
    for (const auto& [k, v] : r.objects_per_image) {
        std::snprintf(line, sizeof line, "  %3d: %8llu\n", k, static_cast<unsigned long long>(v));
        os << line;
    }
    os << "texture modes:\n";
    for (const auto& [k, v] : r.texture_modes) {
        std::snprintf(line, sizeof line, "  %-8s %8llu\n", k.c_str(),
                      static_cast<unsigned long long>(v));
        os << line;
    }
    std::snprintf(line, sizeof line, "camera r: min %.3f  mean %.3f  max %.3f\n", r.r_min, r.r_mean,
                  r.r_max);
    os << line;
    os << "camera theta histogram (10 deg bins): [";
    for (size_t i = 0; i < r.theta_histogram.size(); ++i)
        os << (i ? " " : "") << r.theta_histogram[i];
    os << "]\n";
    return os.str();
}

}  // namespace synthdr
