#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace synthdr::eval {

using json = nlohmann::json;

// One box, ground truth or prediction. YOLO normalized center-size.
struct DetectionRecord {
    std::string image_id;
    int class_index = 0;
    double cx = 0, cy = 0, w = 0, h = 0;
    double confidence = 1.0;  // ground truth carries 1.0
};

struct EvalConfig {
    double iou_threshold = 0.6;   // precision/recall + failure matching
    double conf_threshold = 0.5;  // prediction cutoff for P/R + failures
};

// ---------------------------------------------------------------------------
// IoU on the normalized plane.

struct Box {
    double x0, y0, x1, y1;
};

inline Box to_box(const DetectionRecord& r) {
    return {r.cx - r.w / 2.0, r.cy - r.h / 2.0, r.cx + r.w / 2.0, r.cy + r.h / 2.0};
}

inline double iou(const Box& a, const Box& b) {
    double ix = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    double iy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    double inter = ix * iy;
    double area_a = (a.x1 - a.x0) * (a.y1 - a.y0);
    double area_b = (b.x1 - b.x0) * (b.y1 - b.y0);
    double uni = area_a + area_b - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

inline double iou(const DetectionRecord& a, const DetectionRecord& b) {
    return iou(to_box(a), to_box(b));
}

// ---------------------------------------------------------------------------
// Loading. Ground truth: a directory of YOLO label files (image id = file
// stem). Predictions: the same layout with a trailing confidence, or a
// single file of "image_id class cx cy w h conf" lines.

namespace detail {

inline std::runtime_error record_error(const std::string& file, size_t line, const std::string& what) {
    return std::runtime_error(file + ":" + std::to_string(line) + ": " + what);
}

inline void validate_record(const DetectionRecord& r, const std::string& file, size_t line,
                            bool with_confidence) {
    if (r.class_index < 0) throw record_error(file, line, "negative class index");
    auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!in_unit(r.w)) throw record_error(file, line, "field w out of range (0, 1]");
    if (!in_unit(r.h)) throw record_error(file, line, "field h out of range (0, 1]");
    if (!in_unit(r.cx)) throw record_error(file, line, "field cx out of range (0, 1]");
    if (!in_unit(r.cy)) throw record_error(file, line, "field cy out of range (0, 1]");
    if (with_confidence && (r.confidence < 0.0 || r.confidence > 1.0))
        throw record_error(file, line, "field confidence out of range [0, 1]");
}

inline std::vector<DetectionRecord> load_label_file(const std::string& path,
                                                    const std::string& image_id,
                                                    bool expect_confidence) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::vector<DetectionRecord> out;
    std::string linebuf;
    size_t lineno = 0;
    while (std::getline(in, linebuf)) {
        ++lineno;
        if (linebuf.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(linebuf);
        DetectionRecord r;
        r.image_id = image_id;
        if (!(ls >> r.class_index >> r.cx >> r.cy >> r.w >> r.h))
            throw record_error(path, lineno, "malformed line \"" + linebuf + "\"");
        bool have_conf = static_cast<bool>(ls >> r.confidence);
        if (expect_confidence && !have_conf) r.confidence = 1.0;
        std::string extra;
        if (ls >> extra) throw record_error(path, lineno, "trailing tokens");
        validate_record(r, path, lineno, have_conf);
        out.push_back(r);
    }
    return out;
}

inline std::vector<std::string> list_label_files(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error(dir + ": not a directory");
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace detail

inline std::vector<DetectionRecord> load_ground_truth(const std::string& labels_dir) {
    std::vector<DetectionRecord> out;
    for (const std::string& file : detail::list_label_files(labels_dir)) {
        std::string id = std::filesystem::path(file).stem().string();
        auto records = detail::load_label_file(file, id, false);
        out.insert(out.end(), records.begin(), records.end());
    }
    return out;
}

inline std::vector<DetectionRecord> load_predictions(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<DetectionRecord> out;
    if (fs::is_directory(path)) {
        for (const std::string& file : detail::list_label_files(path)) {
            std::string id = fs::path(file).stem().string();
            auto records = detail::load_label_file(file, id, true);
            out.insert(out.end(), records.begin(), records.end());
        }
        return out;
    }
    // Single-file variant: image_id class cx cy w h conf
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::string linebuf;
    size_t lineno = 0;
    while (std::getline(in, linebuf)) {
        ++lineno;
        if (linebuf.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(linebuf);
        DetectionRecord r;
        if (!(ls >> r.image_id >> r.class_index >> r.cx >> r.cy >> r.w >> r.h >> r.confidence))
            throw detail::record_error(path, lineno, "malformed line \"" + linebuf + "\"");
        detail::validate_record(r, path, lineno, true);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Greedy matching: predictions in confidence order (ties keep input order),
// each matched to the unmatched ground truth of highest IoU >= threshold.

struct MatchSet {
    // Parallel to the prediction order handed in: matched gt index or -1.
    std::vector<int> pred_to_gt;
    std::vector<bool> gt_matched;
};

inline MatchSet match_detections(const std::vector<const DetectionRecord*>& preds,
                                 const std::vector<const DetectionRecord*>& gts,
                                 double iou_threshold) {
    MatchSet result;
    result.pred_to_gt.assign(preds.size(), -1);
    result.gt_matched.assign(gts.size(), false);

    std::vector<size_t> order(preds.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return preds[a]->confidence > preds[b]->confidence;
    });

    for (size_t oi : order) {
        double best = -1.0;
        int best_gt = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (result.gt_matched[g]) continue;
            double v = iou(*preds[oi], *gts[g]);
            if (v >= iou_threshold && v > best) {
                best = v;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0) {
            result.pred_to_gt[oi] = best_gt;
            result.gt_matched[best_gt] = true;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Average precision, 101-point interpolation (COCO convention): mean over
// recall grid r in {0, 0.01, .., 1} of the max precision at recall >= r.

inline double average_precision(const std::vector<std::pair<double, bool>>& scored_tp,
                                uint64_t gt_count) {
    if (gt_count == 0) return 0.0;
    std::vector<size_t> order(scored_tp.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scored_tp[a].first > scored_tp[b].first;
    });

    std::vector<double> precision(order.size()), recall(order.size());
    uint64_t tp = 0;
    for (size_t i = 0; i < order.size(); ++i) {
        if (scored_tp[order[i]].second) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
    }
    // Precision envelope: max precision at recall >= r.
    for (size_t i = precision.size(); i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);

    double sum = 0.0;
    size_t cursor = 0;
    for (int step = 0; step <= 100; ++step) {
        double r = step / 100.0;
        while (cursor < recall.size() && recall[cursor] < r - 1e-12) ++cursor;
        if (cursor < recall.size()) sum += precision[cursor];
    }
    return sum / 101.0;
}

// ---------------------------------------------------------------------------
// Full report.

struct ClassMetrics {
    int class_index = 0;
    uint64_t gt_count = 0;
    uint64_t tp = 0, fp = 0, fn = 0;  // at (conf_threshold, iou_threshold)
    double precision = 0.0, recall = 0.0;
    double ap50 = 0.0, ap50_95 = 0.0;
    bool skipped = false;  // no gt and no predictions
};

struct MetricsReport {
    double map50 = 0.0;
    double map50_95 = 0.0;
    double precision = 0.0;  // micro, over all classes
    double recall = 0.0;
    uint64_t tp = 0, fp = 0, fn = 0;
    bool no_predictions = false;  // precision reported as 0 by convention
    std::vector<ClassMetrics> per_class;
    EvalConfig config;
};

struct FailureReport {
    uint64_t missed = 0;                  // gt with no overlapping prediction of any class
    uint64_t wrong = 0;                   // predictions overlapping a gt of another class
    uint64_t background_fp = 0;           // predictions overlapping nothing
    std::map<std::pair<int, int>, uint64_t> confusion;  // (gt class -> pred class) -> count
};

namespace detail {

struct Grouped {
    // image id -> class -> records, preserving input order within a group.
    std::map<std::string, std::map<int, std::vector<const DetectionRecord*>>> by_image_class;
    std::map<std::string, std::vector<const DetectionRecord*>> by_image;
    std::map<int, uint64_t> gt_per_class;
};

inline Grouped group(const std::vector<DetectionRecord>& records, bool count_gt) {
    Grouped g;
    for (const DetectionRecord& r : records) {
        g.by_image_class[r.image_id][r.class_index].push_back(&r);
        g.by_image[r.image_id].push_back(&r);
        if (count_gt) ++g.gt_per_class[r.class_index];
    }
    return g;
}

// Per-class scored TP flags at one IoU threshold, across all images.
inline std::vector<std::pair<double, bool>> scored_tp_flags(const Grouped& preds,
                                                            const Grouped& gts, int cls,
                                                            double iou_thr) {
    std::vector<std::pair<double, bool>> scored;
    for (const auto& [image_id, by_class] : preds.by_image_class) {
        auto cit = by_class.find(cls);
        if (cit == by_class.end()) continue;
        const std::vector<const DetectionRecord*>& p = cit->second;
        static const std::vector<const DetectionRecord*> kEmpty;
        const std::vector<const DetectionRecord*>* g = &kEmpty;
        auto git = gts.by_image_class.find(image_id);
        if (git != gts.by_image_class.end()) {
            auto gcit = git->second.find(cls);
            if (gcit != git->second.end()) g = &gcit->second;
        }
        MatchSet m = match_detections(p, *g, iou_thr);
        for (size_t i = 0; i < p.size(); ++i)
            scored.emplace_back(p[i]->confidence, m.pred_to_gt[i] >= 0);
    }
    return scored;
}

}  // namespace detail

inline MetricsReport map_metrics(const std::vector<DetectionRecord>& predictions,
                                 const std::vector<DetectionRecord>& ground_truth,
                                 const EvalConfig& config = {}) {
    MetricsReport report;
    report.config = config;

    std::vector<DetectionRecord> filtered;
    for (const DetectionRecord& p : predictions)
        if (p.confidence >= config.conf_threshold) filtered.push_back(p);

    detail::Grouped gt = detail::group(ground_truth, true);
    detail::Grouped all_preds = detail::group(predictions, false);
    detail::Grouped conf_preds = detail::group(filtered, false);

    std::set<int> classes;
    for (const DetectionRecord& r : ground_truth) classes.insert(r.class_index);
    for (const DetectionRecord& r : predictions) classes.insert(r.class_index);

    double ap50_sum = 0.0, ap5095_sum = 0.0;
    size_t scored_classes = 0;

    for (int cls : classes) {
        ClassMetrics cm;
        cm.class_index = cls;
        auto git = gt.gt_per_class.find(cls);
        cm.gt_count = git == gt.gt_per_class.end() ? 0 : git->second;

        // AP over the unfiltered predictions (the PR curve sweeps confidence).
        bool any_preds = false;
        for (const auto& [image_id, by_class] : all_preds.by_image_class)
            if (by_class.count(cls)) any_preds = true;
        if (cm.gt_count == 0 && !any_preds) {
            cm.skipped = true;
            report.per_class.push_back(cm);
            continue;
        }

        cm.ap50 = average_precision(detail::scored_tp_flags(all_preds, gt, cls, 0.5), cm.gt_count);
        double sum = 0.0;
        for (int i = 0; i < 10; ++i) {
            double thr = 0.5 + 0.05 * i;
            sum += average_precision(detail::scored_tp_flags(all_preds, gt, cls, thr), cm.gt_count);
        }
        cm.ap50_95 = sum / 10.0;

        // P/R at the confidence threshold and the configured IoU.
        for (const auto& [image_id, by_class] : conf_preds.by_image_class) {
            auto cit = by_class.find(cls);
            if (cit == by_class.end()) continue;
            static const std::vector<const DetectionRecord*> kEmpty;
            const std::vector<const DetectionRecord*>* g = &kEmpty;
            auto git2 = gt.by_image_class.find(image_id);
            if (git2 != gt.by_image_class.end()) {
                auto gcit = git2->second.find(cls);
                if (gcit != git2->second.end()) g = &gcit->second;
            }
            MatchSet m = match_detections(cit->second, *g, config.iou_threshold);
            for (int mi : m.pred_to_gt) mi >= 0 ? ++cm.tp : ++cm.fp;
        }
        cm.fn = cm.gt_count - cm.tp;
        cm.precision = cm.tp + cm.fp > 0
                           ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp)
                           : 0.0;
        cm.recall = cm.gt_count > 0 ? static_cast<double>(cm.tp) / static_cast<double>(cm.gt_count)
                                    : 0.0;

        ap50_sum += cm.ap50;
        ap5095_sum += cm.ap50_95;
        ++scored_classes;
        report.tp += cm.tp;
        report.fp += cm.fp;
        report.fn += cm.fn;
        report.per_class.push_back(cm);
    }

    if (scored_classes > 0) {
        report.map50 = ap50_sum / static_cast<double>(scored_classes);
        report.map50_95 = ap5095_sum / static_cast<double>(scored_classes);
    }
    if (report.tp + report.fp > 0)
        report.precision = static_cast<double>(report.tp) / static_cast<double>(report.tp + report.fp);
    else
        report.no_predictions = true;  // precision reported 0 with a flag
    if (report.tp + report.fn > 0)
        report.recall = static_cast<double>(report.tp) / static_cast<double>(report.tp + report.fn);
    return report;
}

// Failure taxonomy: class-aware matching first, then every FN becomes
// "missed" (no overlapping prediction of any class) or a confusion pair,
// and every FP becomes "wrong detection" or a background false positive.
inline FailureReport failure_analysis(const std::vector<DetectionRecord>& predictions,
                                      const std::vector<DetectionRecord>& ground_truth,
                                      const EvalConfig& config = {}) {
    FailureReport report;

    std::vector<DetectionRecord> filtered;
    for (const DetectionRecord& p : predictions)
        if (p.confidence >= config.conf_threshold) filtered.push_back(p);

    detail::Grouped gt = detail::group(ground_truth, true);
    detail::Grouped preds = detail::group(filtered, false);

    std::set<std::string> images;
    for (const auto& [id, _] : gt.by_image) images.insert(id);
    for (const auto& [id, _] : preds.by_image) images.insert(id);

    for (const std::string& image_id : images) {
        static const std::vector<const DetectionRecord*> kEmpty;
        const auto* image_gts = &kEmpty;
        const auto* image_preds = &kEmpty;
        if (auto it = gt.by_image.find(image_id); it != gt.by_image.end()) image_gts = &it->second;
        if (auto it = preds.by_image.find(image_id); it != preds.by_image.end())
            image_preds = &it->second;

        // Class-aware matching to find TPs.
        std::vector<bool> gt_tp(image_gts->size(), false);
        std::vector<bool> pred_tp(image_preds->size(), false);
        std::set<int> classes;
        for (const auto* g : *image_gts) classes.insert(g->class_index);
        for (const auto* p : *image_preds) classes.insert(p->class_index);
        for (int cls : classes) {
            std::vector<const DetectionRecord*> p_cls, g_cls;
            std::vector<size_t> p_idx, g_idx;
            for (size_t i = 0; i < image_preds->size(); ++i)
                if ((*image_preds)[i]->class_index == cls) {
                    p_cls.push_back((*image_preds)[i]);
                    p_idx.push_back(i);
                }
            for (size_t i = 0; i < image_gts->size(); ++i)
                if ((*image_gts)[i]->class_index == cls) {
                    g_cls.push_back((*image_gts)[i]);
                    g_idx.push_back(i);
                }
            MatchSet m = match_detections(p_cls, g_cls, config.iou_threshold);
            for (size_t i = 0; i < p_cls.size(); ++i)
                if (m.pred_to_gt[i] >= 0) {
                    pred_tp[p_idx[i]] = true;
                    gt_tp[g_idx[m.pred_to_gt[i]]] = true;
                }
        }

        // FN side: missed vs confusion pair with the best overlapping
        // prediction of another class.
        for (size_t g = 0; g < image_gts->size(); ++g) {
            if (gt_tp[g]) continue;
            double best = 0.0;
            const DetectionRecord* best_pred = nullptr;
            for (const auto* p : *image_preds) {
                double v = iou(*p, *(*image_gts)[g]);
                if (v >= config.iou_threshold && v > best) {
                    best = v;
                    best_pred = p;
                }
            }
            if (!best_pred) {
                ++report.missed;
            } else {
                ++report.confusion[{(*image_gts)[g]->class_index, best_pred->class_index}];
            }
        }

        // FP side: wrong detection vs background.
        for (size_t p = 0; p < image_preds->size(); ++p) {
            if (pred_tp[p]) continue;
            bool overlaps_other_class = false;
            for (const auto* g : *image_gts) {
                if (g->class_index == (*image_preds)[p]->class_index) continue;
                if (iou(*(*image_preds)[p], *g) >= config.iou_threshold) {
                    overlaps_other_class = true;
                    break;
                }
            }
            overlaps_other_class ? ++report.wrong : ++report.background_fp;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report formatting.

inline json metrics_to_json(const MetricsReport& m, const FailureReport& f,
                            const std::vector<std::string>* class_names = nullptr) {
    auto name_of = [&](int cls) {
        if (class_names && cls >= 0 && cls < static_cast<int>(class_names->size()))
            return (*class_names)[cls];
        return "class_" + std::to_string(cls);
    };
    json per_class = json::array();
    for (const ClassMetrics& cm : m.per_class)
        per_class.push_back({{"class_index", cm.class_index},
                             {"name", name_of(cm.class_index)},
                             {"gt", cm.gt_count},
                             {"tp", cm.tp},
                             {"fp", cm.fp},
                             {"fn", cm.fn},
                             {"precision", cm.precision},
                             {"recall", cm.recall},
                             {"ap50", cm.ap50},
                             {"ap50_95", cm.ap50_95},
                             {"skipped", cm.skipped}});
    json confusion = json::array();
    for (const auto& [pair, count] : f.confusion)
        confusion.push_back({{"gt_class", pair.first},
                             {"gt_name", name_of(pair.first)},
                             {"pred_class", pair.second},
                             {"pred_name", name_of(pair.second)},
                             {"count", count}});
    return json{{"iou_threshold", m.config.iou_threshold},
                {"conf_threshold", m.config.conf_threshold},
                {"map50", m.map50},
                {"map50_95", m.map50_95},
                {"precision", m.precision},
                {"recall", m.recall},
                {"no_predictions", m.no_predictions},
                {"tp", m.tp},
                {"fp", m.fp},
                {"fn", m.fn},
                {"per_class", per_class},
                {"failures",
                 {{"missed", f.missed},
                  {"wrong", f.wrong},
                  {"background_fp", f.background_fp},
                  {"confusion", confusion}}}};
}

inline std::string format_metrics_table(const MetricsReport& m, const FailureReport& f,
                                        const std::vector<std::string>* class_names = nullptr) {
    auto name_of = [&](int cls) -> std::string {
        if (class_names && cls >= 0 && cls < static_cast<int>(class_names->size()))
            return (*class_names)[cls];
        return "class_" + std::to_string(cls);
    };
    std::ostringstream os;
    char line[200];
    std::snprintf(line, sizeof line, "evaluation (IoU=%.2f conf=%.2f)\n", m.config.iou_threshold,
                  m.config.conf_threshold);
    os << line;
    std::snprintf(line, sizeof line, "%-20s %6s %6s %6s %6s %8s %8s %8s %9s\n", "class", "gt", "tp",
                  "fp", "fn", "prec", "recall", "mAP@50", "mAP@50-95");
    os << line;
    for (const ClassMetrics& cm : m.per_class) {
        if (cm.skipped) continue;
        std::snprintf(line, sizeof line, "%-20s %6llu %6llu %6llu %6llu %8.1f %8.1f %8.1f %9.1f\n",
                      name_of(cm.class_index).c_str(), static_cast<unsigned long long>(cm.gt_count),
                      static_cast<unsigned long long>(cm.tp), static_cast<unsigned long long>(cm.fp),
                      static_cast<unsigned long long>(cm.fn), cm.precision * 100.0,
                      cm.recall * 100.0, cm.ap50 * 100.0, cm.ap50_95 * 100.0);
        os << line;
    }
    std::snprintf(line, sizeof line, "%-20s %6llu %6llu %6llu %6llu %8.1f %8.1f %8.1f %9.1f\n", "all",
                  static_cast<unsigned long long>(m.tp + m.fn), static_cast<unsigned long long>(m.tp),
                  static_cast<unsigned long long>(m.fp), static_cast<unsigned long long>(m.fn),
                  m.precision * 100.0, m.recall * 100.0, m.map50 * 100.0, m.map50_95 * 100.0);
    os << line;
    if (m.no_predictions) os << "note: no predictions above the confidence threshold; precision reported as 0\n";

    std::snprintf(line, sizeof line,
                  "failures: missed %llu, wrong %llu, background false positives %llu\n",
                  static_cast<unsigned long long>(f.missed), static_cast<unsigned long long>(f.wrong),
                  static_cast<unsigned long long>(f.background_fp));
    os << line;
    for (const auto& [pair, count] : f.confusion) {
        std::snprintf(line, sizeof line, "  confusion %s -> %s: %llu\n", name_of(pair.first).c_str(),
                      name_of(pair.second).c_str(), static_cast<unsigned long long>(count));
        os << line;
    }
    return os.str();
}

}  // namespace synthdr::eval
