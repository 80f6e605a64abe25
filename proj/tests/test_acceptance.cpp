// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line. Run via ctest or directly:
//   ./test_acceptance "[acceptance]" --reporter console

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <iostream>

#include "synthdr/synthdr.hpp"
#include "oracle_eval.hpp"
#include "test_support.hpp"

using namespace synthdr;

namespace {

void report(int criterion, bool pass, const std::string& detail) {
    std::cout << "[criterion " << criterion << "] " << (pass ? "PASS" : "FAIL") << " - " << detail
              << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int hw_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n > 0 ? static_cast<int>(n) : 1;
}

// Small two-category catalog used by the scene-level criteria.
LoadedCatalog scene_catalog() {
    LoadedCatalog catalog;
    catalog.categories = {{"cube", "", 1.0}, {"wedge", "", 1.0}};
    catalog.meshes = {std::make_shared<TriangleMesh>(make_cube(0.15)),
                      std::make_shared<TriangleMesh>(make_cone(0.08, 0.18, 12))};
    return catalog;
}

GenerationConfig scene_config(int width, int height, RenderBackend backend, int max_objects) {
    GenerationConfig cfg;
    cfg.seed = 2024;
    cfg.image_count = 1;
    cfg.width = width;
    cfg.height = height;
    cfg.output_dir = "";
    cfg.catalog = {{"cube", "", 1.0}, {"wedge", "", 1.0}};
    cfg.render.backend = backend;
    cfg.render.samples_per_pixel = 16;
    cfg.render.max_depth = 4;
    cfg.sampler.max_objects = max_objects;
    cfg.sampler.texture_modes = {1.0, 0.0, 0.0};
    return cfg;
}

AreaLight rect_light(Vec3 center, Vec3 normal, double half_u, double half_v, double radiance) {
    AreaLight light;
    light.center = center;
    light.normal = normalize(normal);
    branchless_onb(light.normal, light.edge_u, light.edge_v);
    light.half_u = half_u;
    light.half_v = half_v;
    light.color = {1, 1, 1};
    light.power = radiance * kPi * light.area();
    return light;
}

Scene furnace_scene(double emission, double albedo) {
    Scene scene;
    double h = 1.0;
    const Vec3 centers[6] = {{h, 0, 0}, {-h, 0, 0}, {0, h, 0}, {0, -h, 0}, {0, 0, h}, {0, 0, -h}};
    for (int i = 0; i < 6; ++i) scene.lights.push_back(rect_light(centers[i], -centers[i], h, h, emission));
    for (int i = 0; i < 6; ++i) {
        SceneInstance inst;
        inst.mesh = detail::make_light_mesh(scene.lights[i]);
        inst.material.albedo_constant = Vec3{albedo, albedo, albedo};
        inst.material.diffuse_only = true;
        inst.material.emission = scene.lights[i].radiance();
        inst.light_index = i;
        scene.instances.push_back(std::move(inst));
    }
    scene.finalize();
    return scene;
}

}  // namespace

TEST_CASE("criterion 1: camera placement transform", "[acceptance]") {
    auto start = std::chrono::steady_clock::now();
    CameraRanges ranges;
    Rect2 area{-0.8, -0.3, 1.1, 0.9};
    Rng rng = make_stream(4242, 0);
    Vec3 center = area.center();

    int failures = 0;
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        CameraSpec cam = sample_camera(area, ranges, rng);
        double norm_err = std::abs(length(cam.position - center) - cam.r);
        // Direct evaluation of the spherical transform.
        Vec3 direct{cam.r * std::cos(cam.phi) * std::sin(cam.theta),
                    cam.r * std::sin(cam.phi) * std::sin(cam.theta), cam.r * std::cos(cam.theta)};
        Vec3 diff = (cam.position - center) - direct;
        double comp_err = std::max({std::abs(diff.x), std::abs(diff.y), std::abs(diff.z)});
        worst = std::max(worst, std::max(norm_err, comp_err));
        if (norm_err > 1e-9 || comp_err > 1e-9) ++failures;
    }
    double elapsed = seconds_since(start);
    bool pass = failures == 0 && elapsed < 1.0;
    std::ostringstream detail;
    detail << "10k cameras, worst deviation " << worst << ", " << elapsed << " s";
    report(1, pass, detail.str());
    CHECK(pass);
}

struct SceneBatch {
    std::vector<ImageArtifacts> artifacts;
    LoadedCatalog catalog;
};

static SceneBatch& scene_batch_500() {
    static SceneBatch batch = [] {
        SceneBatch b;
        b.catalog = scene_catalog();
        GenerationConfig cfg = scene_config(256, 256, RenderBackend::rasterized, 10);
        AssetPools assets;
        TextureCache textures;
        b.artifacts.reserve(500);
        for (int i = 0; i < 500; ++i)
            b.artifacts.push_back(produce_image(cfg, b.catalog, assets, textures, i));
        return b;
    }();
    return batch;
}

TEST_CASE("criterion 2: gravity and non-overlap over 500 scenes", "[acceptance]") {
    auto start = std::chrono::steady_clock::now();
    SceneBatch& batch = scene_batch_500();

    int gravity_bad = 0, overlap_bad = 0, distractor_bad = 0;
    size_t total_targets = 0;
    for (const ImageArtifacts& art : batch.artifacts) {
        const SceneLayout& layout = art.layout;
        total_targets += layout.targets.size();
        for (const ObjectInstance& t : layout.targets) {
            TriangleMesh placed = transform_mesh(*batch.catalog.meshes[t.category], t.pose);
            if (std::abs(mesh_aabb(placed).lo.z) > 1e-9) ++gravity_bad;
        }
        for (size_t a = 0; a < layout.targets.size(); ++a)
            for (size_t b2 = a + 1; b2 < layout.targets.size(); ++b2)
                if (layout.targets[a].bounds.footprint_overlaps(layout.targets[b2].bounds))
                    ++overlap_bad;
        for (const ObjectInstance& d : layout.distractors)
            for (const ObjectInstance& t : layout.targets)
                if (d.bounds.overlaps(t.bounds)) ++distractor_bad;
    }
    double elapsed = seconds_since(start);
    bool pass = gravity_bad == 0 && overlap_bad == 0 && distractor_bad == 0 && elapsed < 120.0;
    std::ostringstream detail;
    detail << "500 scenes, " << total_targets << " targets; gravity violations " << gravity_bad
           << ", footprint overlaps " << overlap_bad << ", distractor overlaps " << distractor_bad
           << "; " << elapsed << " s";
    report(2, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 3: annotation exactness on those scenes", "[acceptance]") {
    SceneBatch& batch = scene_batch_500();

    size_t labels = 0;
    int box_mismatch = 0, popcount_bad = 0;
    for (const ImageArtifacts& art : batch.artifacts) {
        std::vector<InstanceMask> masks =
            masks_from_id_pass(art.ids, static_cast<uint32_t>(art.layout.targets.size()));
        size_t record_cursor = 0;
        for (size_t i = 0; i < art.layout.targets.size(); ++i) {
            if (!art.labeled[i]) continue;
            REQUIRE(record_cursor < art.records.size());
            const YoloRecord& record = art.records[record_cursor++];
            ++labels;
            const InstanceMask& mask = masks[art.layout.targets[i].instance_id - 1];
            if (mask.count < 25) ++popcount_bad;
            auto tight = bbox_from_mask(mask, art.ids.width, art.ids.height);
            PixelBox back = yolo_to_pixel_box(record, art.ids.width, art.ids.height);
            if (!tight || tight->x_min != back.x_min || tight->x_max != back.x_max ||
                tight->y_min != back.y_min || tight->y_max != back.y_max)
                ++box_mismatch;
        }
        CHECK(record_cursor == art.records.size());
    }
    bool pass = box_mismatch == 0 && popcount_bad == 0 && labels > 500;
    std::ostringstream detail;
    detail << labels << " labels; box mismatches " << box_mismatch << ", popcount violations "
           << popcount_bad;
    report(3, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 4: renderer physics (furnace + energy bound)", "[acceptance]") {
    auto start = std::chrono::steady_clock::now();
    Scene scene = furnace_scene(0.5, 0.5);  // L = 1
    CameraSpec cam;
    cam.position = {0, 0, 0};
    cam.look_at = {1, 0.2, 0.1};
    cam.focal_length_mm = 24.0;
    cam.image_width = cam.image_height = 64;

    RenderSettings settings;
    settings.samples_per_pixel = 1024;
    settings.max_depth = 32;
    settings.seed = 7;
    settings.threads = hw_threads();
    RenderBuffer buf = render_pathtraced(scene, cam, settings);
    double worst = 0.0;
    for (const Vec3& px : buf.pixels)
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(px[c] - 1.0));

    // White-diffuse hemispherical reflectance via the BRDF sampler.
    Rng rng = make_stream(4243, 0);
    ShadingParams white{{1, 1, 1}, 0.0, 1.0};
    const Vec3 n{0, 0, 1};
    Vec3 wo = normalize(Vec3{0.3, 0.1, 0.9});
    double refl = 0.0;
    const int samples = 100000;
    for (int i = 0; i < samples; ++i) {
        auto s = sample_brdf(white, wo, n, rng);
        if (s) refl += max_component(s->reflectance) * dot(n, s->wi) / s->pdf;
    }
    refl /= samples;

    double elapsed = seconds_since(start);
    bool pass = worst <= 0.02 && refl <= 1.02 && elapsed < 300.0;
    std::ostringstream detail;
    detail << "furnace max |err| " << worst << " (limit 0.02); white-diffuse DHR " << refl
           << " (limit 1.02); " << elapsed << " s";
    report(4, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 5: id pass vs traced primary visibility", "[acceptance]") {
    LoadedCatalog catalog = scene_catalog();
    GenerationConfig cfg = scene_config(256, 256, RenderBackend::rasterized, 6);
    AssetPools assets;
    TextureCache textures;

    double worst_iou = 1.0;
    int instances_checked = 0;
    for (int img = 0; img < 20; ++img) {
        Rng rng = image_stream(cfg.seed, img, StreamPurpose::scene);
        SamplerRanges ranges = cfg.sampler;
        ranges.camera.image_width = cfg.width;
        ranges.camera.image_height = cfg.height;
        SceneLayout layout = sample_scene(catalog, assets, ranges, rng);
        Scene scene = build_scene(layout, catalog, textures);
        IdBuffer raster_ids = render_id_pass(scene, layout.camera);
        IdBuffer traced_ids = trace_primary_ids(scene, layout.camera);
        for (const ObjectInstance& t : layout.targets) {
            uint64_t inter = 0, uni = 0;
            for (size_t i = 0; i < raster_ids.ids.size(); ++i) {
                bool a = raster_ids.ids[i] == t.instance_id;
                bool b = traced_ids.ids[i] == t.instance_id;
                inter += (a && b);
                uni += (a || b);
            }
            if (uni < 25) continue;
            ++instances_checked;
            worst_iou = std::min(worst_iou, double(inter) / double(uni));
        }
    }
    bool pass = worst_iou >= 0.99 && instances_checked > 20;
    std::ostringstream detail;
    detail << instances_checked << " silhouettes over 20 scenes, worst IoU " << worst_iou;
    report(5, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 6: byte-identical reruns across thread counts", "[acceptance]") {
    auto start = std::chrono::steady_clock::now();
    auto dir = testsupport::make_temp_dir("accept6");
    testsupport::write_text(dir / "cube.obj", testsupport::unit_cube_obj());

    GenerationConfig cfg;
    cfg.seed = 31337;
    cfg.image_count = 50;
    cfg.width = 256;
    cfg.height = 256;
    cfg.catalog = {{"cube", (dir / "cube.obj").string(), 0.15},
                   {"wedge", (dir / "cube.obj").string(), 0.08}};
    cfg.render.backend = RenderBackend::path_traced;
    cfg.render.samples_per_pixel = 16;
    cfg.render.max_depth = 4;
    cfg.sampler.max_objects = 4;
    cfg.sampler.distractors.max_count = 2;
    cfg.sampler.texture_modes = {1.0, 0.0, 0.0};

    cfg.output_dir = (dir / "run1").string();
    GenerateOptions opt1;
    opt1.threads = 1;
    generate_dataset(cfg, opt1);

    cfg.output_dir = (dir / "run2").string();
    GenerateOptions opt8;
    opt8.threads = 8;
    generate_dataset(cfg, opt8);

    auto t1 = testsupport::hash_tree(dir / "run1");
    auto t2 = testsupport::hash_tree(dir / "run2");
    size_t mismatches = 0;
    if (t1.size() != t2.size()) mismatches = 999;
    else
        for (const auto& [rel, hash] : t1)
            if (!t2.count(rel) || t2.at(rel) != hash) ++mismatches;

    double elapsed = seconds_since(start);
    bool pass = mismatches == 0 && t1.size() >= 151 && elapsed < 600.0;
    std::ostringstream detail;
    detail << t1.size() << " files per tree, mismatching " << mismatches << "; " << elapsed << " s";
    report(6, pass, detail.str());
    CHECK(pass);
    std::filesystem::remove_all(dir);
}

TEST_CASE("criterion 7: post-processing application rates", "[acceptance]") {
    auto start = std::chrono::steady_clock::now();
    auto dir = testsupport::make_temp_dir("accept7");
    testsupport::write_text(dir / "cube.obj", testsupport::unit_cube_obj());

    GenerationConfig cfg;
    cfg.seed = 555;
    cfg.image_count = 5000;
    cfg.width = 64;
    cfg.height = 64;
    cfg.output_dir = (dir / "out").string();
    cfg.catalog = {{"cube", (dir / "cube.obj").string(), 0.2}};
    cfg.render.backend = RenderBackend::rasterized;
    cfg.sampler.max_objects = 1;
    cfg.sampler.distractors.max_count = 0;
    cfg.sampler.texture_modes = {1.0, 0.0, 0.0};
    // postfx defaults: both probabilities 0.1

    GenerateOptions opt;
    opt.threads = 2;
    json manifest = generate_dataset(cfg, opt);
    StatsReport stats = dataset_stats(manifest);

    double bound = 3.0 * std::sqrt(0.1 * 0.9 / 5000.0);
    double noise_err = std::abs(stats.noise_rate - 0.1);
    double blur_err = std::abs(stats.blur_rate - 0.1);
    double elapsed = seconds_since(start);
    bool pass = stats.ok_count == 5000 && noise_err <= bound && blur_err <= bound;
    std::ostringstream detail;
    detail << "5000 images; noise rate " << stats.noise_rate << ", blur rate " << stats.blur_rate
           << " (target 0.1 +/- " << bound << "); " << elapsed << " s";
    report(7, pass, detail.str());
    CHECK(pass);
    std::filesystem::remove_all(dir);
}

TEST_CASE("criterion 8: metric oracle equivalence", "[acceptance]") {
    auto start = std::chrono::steady_clock::now();
    Rng rng = make_stream(888, 0);

    // Randomized equivalence.
    int trials = 200, mismatches = 0;
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<eval::DetectionRecord> gts, preds;
        int classes = 1 + static_cast<int>(rng.uniform_int(5));
        int images = 1 + static_cast<int>(rng.uniform_int(10));
        for (int img = 0; img < images; ++img) {
            std::string id = "img" + std::to_string(img);
            int n = static_cast<int>(rng.uniform_int(10));
            for (int g = 0; g < n; ++g) {
                double w = rng.uniform(0.05, 0.3), h = rng.uniform(0.05, 0.3);
                double cx = rng.uniform(w / 2, 1 - w / 2), cy = rng.uniform(h / 2, 1 - h / 2);
                int cls = static_cast<int>(rng.uniform_int(classes));
                gts.push_back({id, cls, cx, cy, w, h, 1.0});
                if (rng.uniform() < 0.75) {
                    double j = rng.uniform(0.0, 0.08);
                    preds.push_back({id,
                                     rng.uniform() < 0.85 ? cls
                                                          : static_cast<int>(rng.uniform_int(classes)),
                                     std::clamp(cx + rng.uniform(-j, j), w / 2, 1 - w / 2),
                                     std::clamp(cy + rng.uniform(-j, j), h / 2, 1 - h / 2), w, h,
                                     rng.uniform(0.05, 1.0)});
                }
            }
            int extra = static_cast<int>(rng.uniform_int(5));
            for (int f = 0; f < extra; ++f) {
                double w = rng.uniform(0.05, 0.2), h = rng.uniform(0.05, 0.2);
                preds.push_back({id, static_cast<int>(rng.uniform_int(classes)),
                                 rng.uniform(w / 2, 1 - w / 2), rng.uniform(h / 2, 1 - h / 2), w, h,
                                 rng.uniform(0.05, 1.0)});
            }
        }
        std::vector<oracle::ODet> ogts, opreds;
        for (const auto& g : gts) ogts.push_back({g.image_id, g.class_index, g.cx, g.cy, g.w, g.h, 1.0});
        for (const auto& p : preds)
            opreds.push_back({p.image_id, p.class_index, p.cx, p.cy, p.w, p.h, p.confidence});

        eval::MetricsReport mine = eval::map_metrics(preds, gts);
        oracle::OracleResult ref = oracle::evaluate(opreds, ogts);
        double err = std::max({std::abs(mine.map50 - ref.map50),
                               std::abs(mine.map50_95 - ref.map50_95),
                               std::abs(mine.precision - ref.precision),
                               std::abs(mine.recall - ref.recall)});
        worst = std::max(worst, err);
        if (err >= 1e-9) ++mismatches;
    }

    // Perfect-prediction identity.
    std::vector<eval::DetectionRecord> gts = {{"a", 0, 0.3, 0.3, 0.2, 0.2, 1.0},
                                              {"a", 1, 0.7, 0.7, 0.2, 0.2, 1.0},
                                              {"b", 2, 0.5, 0.5, 0.4, 0.4, 1.0}};
    eval::MetricsReport perfect = eval::map_metrics(gts, gts);
    bool identity = perfect.map50 == 1.0 && perfect.map50_95 == 1.0 && perfect.precision == 1.0 &&
                    perfect.recall == 1.0;

    // Confusion toy instance: gear1 (4) predicted as gear2 (5).
    std::vector<eval::DetectionRecord> cgts = {{"img", 4, 0.4, 0.6, 0.25, 0.25, 1.0}};
    std::vector<eval::DetectionRecord> cpreds = {{"img", 5, 0.4, 0.6, 0.25, 0.25, 0.92}};
    eval::FailureReport confusion = eval::failure_analysis(cpreds, cgts);
    bool confusion_ok = confusion.wrong == 1 && confusion.confusion.count({4, 5}) &&
                        confusion.confusion.at({4, 5}) == 1;

    double elapsed = seconds_since(start);
    bool pass = mismatches == 0 && identity && confusion_ok && elapsed < 30.0;
    std::ostringstream detail;
    detail << trials << " randomized instances, worst |err| " << worst << "; identity "
           << (identity ? "ok" : "BROKEN") << "; gear1->gear2 " << (confusion_ok ? "ok" : "BROKEN")
           << "; " << elapsed << " s";
    report(8, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 9: protocol constants and Table V presets", "[acceptance]") {
    eval::EvalConfig defaults;
    bool protocol = defaults.iou_threshold == 0.6 && defaults.conf_threshold == 0.5;

    // Default generation resolution comes from the config schema.
    bool resolution = false;
    {
        json doc = {{"image_count", 1},
                    {"output_dir", "x"},
                    {"catalog", {{"categories", json::array({{{"name", "c"}, {"mesh", "/dev/null"}}})}}}};
        try {
            GenerationConfig parsed = parse_config(doc, ".");
            resolution = parsed.width == 720 && parsed.height == 720;
        } catch (const ConfigError&) {
            resolution = false;
        }
    }

    // Shipped presets carry the per-category counts from the data-size study.
    std::map<std::string, int> expected = {
        {"robotics.json", 800}, {"u1.json", 1500}, {"u2.json", 3000}, {"u3.json", 1500}};
    std::filesystem::path presets = std::filesystem::path(SYNTHDR_SOURCE_DIR) / "presets";
    bool preset_counts = true;
    std::ostringstream preset_detail;
    for (const auto& [file, count] : expected) {
        std::ifstream in(presets / file);
        if (!in) {
            preset_counts = false;
            preset_detail << file << " missing; ";
            continue;
        }
        json doc = json::parse(in);
        int actual = doc.value("images_per_category", -1);
        if (actual != count) {
            preset_counts = false;
            preset_detail << file << " has " << actual << " (want " << count << "); ";
        }
    }
    // The GDR preset pins the 30-degree rotation clamp.
    bool gdr_clamp = false;
    {
        std::ifstream in(presets / "u1.json");
        if (in) {
            json doc = json::parse(in);
            gdr_clamp = doc["sampler"]["rotation_limits_deg"]["x"] == 30.0 &&
                        doc["sampler"]["rotation_limits_deg"]["y"] == 30.0;
        }
    }

    bool pass = protocol && resolution && preset_counts && gdr_clamp;
    std::ostringstream detail;
    detail << "eval defaults IoU=" << defaults.iou_threshold << " conf=" << defaults.conf_threshold
           << "; default resolution " << (resolution ? "720x720" : "WRONG") << "; presets "
           << (preset_counts ? "800/1500/3000/1500" : preset_detail.str()) << "; U1 clamp "
           << (gdr_clamp ? "30 deg" : "MISSING");
    report(9, pass, detail.str());
    CHECK(pass);
}

TEST_CASE("criterion 10: performance envelope (informational)", "[acceptance]") {
    // ~184k triangles: nine subdivided icospheres resting on the ground.
    LoadedCatalog catalog;
    catalog.categories = {{"ball", "", 1.0}};
    catalog.meshes = {std::make_shared<TriangleMesh>(make_icosphere(0.08, 5))};  // 20480 tris

    SceneLayout layout;
    uint32_t id = 1;
    for (int gx = 0; gx < 3; ++gx)
        for (int gy = 0; gy < 3; ++gy) {
            ObjectInstance t;
            t.kind = InstanceKind::target;
            t.category = 0;
            t.pose.translation = {gx * 0.25 - 0.25, gy * 0.25 - 0.25, 0.08};
            t.material.mode = TextureMode::solid;
            t.material.solid_color = {0.6, 0.55, 0.5};
            t.instance_id = id++;
            layout.targets.push_back(t);
        }
    layout.objects_area = {-0.4, -0.4, 0.4, 0.4};
    layout.ground_side = 4.0;
    layout.wall_height = 2.0;
    layout.lights.push_back(rect_light({0.3, 0.0, 1.6}, {0, 0, -1}, 0.4, 0.4, 60.0));
    layout.lights.push_back(rect_light({-0.5, 0.4, 1.5}, {0.2, -0.1, -1}, 0.3, 0.3, 40.0));
    layout.camera.position = {1.1, 0.9, 1.0};
    layout.camera.look_at = {0, 0, 0.1};
    layout.camera.focal_length_mm = 40.0;
    layout.camera.image_width = layout.camera.image_height = 256;

    TextureCache textures;
    Scene scene = build_scene(layout, catalog, textures);
    size_t tris = scene.bvh.triangles().size();

    RenderSettings settings;
    settings.samples_per_pixel = 64;
    settings.max_depth = 6;
    settings.seed = 3;
    settings.threads = hw_threads();

    auto start = std::chrono::steady_clock::now();
    RenderBuffer buf = render_pathtraced(scene, layout.camera, settings);
    double elapsed = seconds_since(start);
    (void)buf;

    // Envelope stated for 8 hardware threads; scale for this host, then
    // apply the 2x CI allowance.
    double scale = std::max(1.0, 8.0 / hw_threads());
    double budget = 10.0 * scale * 2.0;
    bool pass = elapsed <= budget;
    std::ostringstream detail;
    detail << tris << " triangles, 256x256 @ 64 spp on " << hw_threads() << " threads: " << elapsed
           << " s (budget " << budget << " s, envelope 10 s at 8 threads)";
    report(10, pass, detail.str());
    CHECK(pass);
}
