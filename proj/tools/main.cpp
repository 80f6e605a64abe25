// synthdr command-line front end: dataset generation, prediction scoring,
// dataset statistics, and single-scene previews.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "synthdr/synthdr.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int default_threads() {
    if (const char* env = std::getenv("SYNTHDR_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct GenerateArgs {
    std::string config_path;
    std::string output_override;
    int64_t seed_override = -1;
    int count_override = 0;
    int threads = default_threads();
};

int cmd_generate(const GenerateArgs& args) {
    synthdr::GenerationConfig cfg;
    try {
        cfg = synthdr::load_config(args.config_path);
        if (args.seed_override >= 0) cfg.seed = static_cast<uint64_t>(args.seed_override);
        if (args.count_override > 0) cfg.image_count = args.count_override;
        if (!args.output_override.empty())
            cfg.output_dir = std::filesystem::absolute(args.output_override).lexically_normal().string();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    // Catalog/asset problems surface before any output file exists.
    synthdr::LoadedCatalog catalog;
    synthdr::AssetPools assets;
    try {
        catalog = synthdr::load_catalog(cfg);
        assets = synthdr::load_assets(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        synthdr::GenerateOptions opt;
        opt.threads = args.threads;
        int last_percent = -1;
        opt.progress = [&](int done, int total) {
            int percent = done * 100 / total;
            if (percent / 10 != last_percent / 10 || done == total) {
                last_percent = percent;
                std::cerr << "generated " << done << "/" << total << " images\n";
            }
        };
        synthdr::json manifest = synthdr::generate_dataset(cfg, opt);
        synthdr::StatsReport stats = synthdr::dataset_stats(manifest);
        std::cout << synthdr::format_stats_table(stats);
        std::cout << "dataset written to " << cfg.output_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

struct EvaluateArgs {
    std::string gt_dir;
    std::string predictions_path;
    double iou = 0.6;
    double conf = 0.5;
    std::string classes_file;
    std::string report_path = "evaluation_report.json";
};

int cmd_evaluate(const EvaluateArgs& args) {
    std::vector<synthdr::eval::DetectionRecord> gts, preds;
    std::vector<std::string> class_names;
    try {
        gts = synthdr::eval::load_ground_truth(args.gt_dir);
        preds = synthdr::eval::load_predictions(args.predictions_path);
        if (!args.classes_file.empty()) {
            std::ifstream in(args.classes_file);
            if (!in) throw std::runtime_error(args.classes_file + ": cannot open");
            std::string name;
            while (std::getline(in, name))
                if (!name.empty()) class_names.push_back(name);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        synthdr::eval::EvalConfig config{args.iou, args.conf};
        synthdr::eval::MetricsReport metrics = synthdr::eval::map_metrics(preds, gts, config);
        synthdr::eval::FailureReport failures = synthdr::eval::failure_analysis(preds, gts, config);
        const auto* names = class_names.empty() ? nullptr : &class_names;
        std::cout << synthdr::eval::format_metrics_table(metrics, failures, names);

        std::ofstream out(args.report_path, std::ios::binary);
        if (!out) throw std::runtime_error(args.report_path + ": cannot write report");
        out << synthdr::eval::metrics_to_json(metrics, failures, names).dump(2) << "\n";
        std::cout << "report written to " << args.report_path << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_stats(const std::string& manifest_path) {
    try {
        synthdr::json manifest = synthdr::load_manifest(manifest_path);
        synthdr::StatsReport stats = synthdr::dataset_stats(manifest);
        std::cout << synthdr::format_stats_table(stats);

        // Advisory integrity pass over referenced files.
        std::filesystem::path root = std::filesystem::path(manifest_path).parent_path();
        size_t missing = 0;
        for (const synthdr::json& e : manifest.at("images")) {
            if (e.value("status", "") != "ok") continue;
            for (const char* key : {"image", "label", "mask"})
                if (!std::filesystem::exists(root / e.value(key, "")) ) ++missing;
        }
        if (missing > 0)
            std::cout << "warning: " << missing << " files referenced by the manifest are missing\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

struct PreviewArgs {
    std::string config_path;
    int64_t seed_override = -1;
    int image_index = 0;
    std::string backend = "config";
    std::string output_dir = ".";
    int threads = default_threads();
};

void draw_box(synthdr::ImageRgb8& img, const synthdr::PixelBox& box, int class_index) {
    static const uint8_t palette[6][3] = {{255, 64, 64},  {64, 255, 64},  {64, 96, 255},
                                          {255, 224, 32}, {255, 64, 255}, {32, 224, 224}};
    const uint8_t* color = palette[class_index % 6];
    auto plot = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
        uint8_t* p = img.pixel(x, y);
        p[0] = color[0];
        p[1] = color[1];
        p[2] = color[2];
    };
    for (int x = box.x_min; x <= box.x_max; ++x)
        for (int t = 0; t < 2; ++t) {
            plot(x, box.y_min + t);
            plot(x, box.y_max - t);
        }
    for (int y = box.y_min; y <= box.y_max; ++y)
        for (int t = 0; t < 2; ++t) {
            plot(box.x_min + t, y);
            plot(box.x_max - t, y);
        }
}

int cmd_preview(const PreviewArgs& args) {
    synthdr::GenerationConfig cfg;
    synthdr::LoadedCatalog catalog;
    synthdr::AssetPools assets;
    try {
        cfg = synthdr::load_config(args.config_path, /*require_output=*/false);
        if (args.seed_override >= 0) cfg.seed = static_cast<uint64_t>(args.seed_override);
        catalog = synthdr::load_catalog(cfg);
        assets = synthdr::load_assets(cfg);
        if (args.backend != "config" && args.backend != "path" && args.backend != "raster" &&
            args.backend != "both")
            throw std::runtime_error("--backend must be one of: config, path, raster, both");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        namespace fs = std::filesystem;
        fs::create_directories(args.output_dir);
        synthdr::TextureCache textures;

        std::vector<std::pair<std::string, synthdr::RenderBackend>> passes;
        if (args.backend == "config")
            passes.emplace_back(cfg.render.backend == synthdr::RenderBackend::path_traced ? "path"
                                                                                          : "raster",
                                cfg.render.backend);
        if (args.backend == "path" || args.backend == "both")
            passes.emplace_back("path", synthdr::RenderBackend::path_traced);
        if (args.backend == "raster" || args.backend == "both")
            passes.emplace_back("raster", synthdr::RenderBackend::rasterized);

        char base[64];
        std::snprintf(base, sizeof base, "preview_%06d", args.image_index);
        synthdr::ImageRgb8 overlay_source;
        synthdr::IdBuffer ids;
        std::vector<synthdr::YoloRecord> records;

        for (const auto& [name, backend] : passes) {
            synthdr::ImageArtifacts art = synthdr::produce_image(
                cfg, catalog, assets, textures, args.image_index, backend, args.threads);
            std::string file = std::string(base) + "_" + name + ".png";
            synthdr::write_png_rgb8((fs::path(args.output_dir) / file).string(), art.image);
            std::cout << "wrote " << file << "\n";
            overlay_source = art.image;
            ids = art.ids;
            records = art.records;
        }

        // Mask is backend-independent (same id pass).
        synthdr::write_mask_png((fs::path(args.output_dir) / (std::string(base) + "_mask.png")).string(),
                                ids);
        std::cout << "wrote " << base << "_mask.png\n";

        synthdr::ImageRgb8 overlay = overlay_source;
        for (const synthdr::YoloRecord& r : records)
            draw_box(overlay, synthdr::yolo_to_pixel_box(r, overlay.width, overlay.height),
                     r.class_index);
        synthdr::write_png_rgb8((fs::path(args.output_dir) / (std::string(base) + "_overlay.png")).string(),
                                overlay);
        std::cout << "wrote " << base << "_overlay.png (" << records.size() << " boxes)\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthdr: domain-randomized synthetic dataset generation and detection scoring"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "Generate a detection dataset from a config");
    generate->add_option("-c,--config", gen.config_path, "Config JSON path")->required();
    generate->add_option("--seed", gen.seed_override, "Override the config seed");
    generate->add_option("--count", gen.count_override, "Override the image count");
    generate->add_option("-o,--output", gen.output_override, "Override the output directory");
    generate->add_option("-j,--threads", gen.threads, "Worker threads (default: hardware, or SYNTHDR_THREADS)");

    EvaluateArgs ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against YOLO ground truth");
    evaluate->add_option("-g,--ground-truth", ev.gt_dir, "Ground-truth label directory")->required();
    evaluate->add_option("-p,--predictions", ev.predictions_path,
                         "Predictions directory or single file")->required();
    evaluate->add_option("--iou", ev.iou, "IoU threshold for precision/recall (default 0.6)");
    evaluate->add_option("--conf", ev.conf, "Confidence threshold (default 0.5)");
    evaluate->add_option("--classes", ev.classes_file, "Optional class-name file (one per line)");
    evaluate->add_option("--report", ev.report_path, "JSON report path");

    std::string manifest_path;
    CLI::App* stats = app.add_subcommand("stats", "Print statistics for a generated dataset");
    stats->add_option("-m,--manifest", manifest_path, "manifest.json path")->required();

    PreviewArgs pv;
    CLI::App* preview = app.add_subcommand("preview", "Render one scene for config debugging");
    preview->add_option("-c,--config", pv.config_path, "Config JSON path")->required();
    preview->add_option("--seed", pv.seed_override, "Override the config seed");
    preview->add_option("--image-index", pv.image_index, "Image index to reproduce");
    preview->add_option("--backend", pv.backend, "config | path | raster | both");
    preview->add_option("-o,--output", pv.output_dir, "Output directory (default: cwd)");
    preview->add_option("-j,--threads", pv.threads, "Render threads");

    CLI11_PARSE(app, argc, argv);

    if (generate->parsed()) return cmd_generate(gen);
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (stats->parsed()) return cmd_stats(manifest_path);
    if (preview->parsed()) return cmd_preview(pv);
    return kExitValidation;
}
