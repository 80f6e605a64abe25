#include <catch2/catch_amalgamated.hpp>

#include "synthdr/eval.hpp"
#include "synthdr/rng.hpp"
#include "oracle_eval.hpp"
#include "test_support.hpp"

using namespace synthdr;
using eval::DetectionRecord;

namespace {

DetectionRecord det(std::string img, int cls, double cx, double cy, double w, double h,
                    double conf = 1.0) {
    return {std::move(img), cls, cx, cy, w, h, conf};
}

oracle::ODet to_oracle(const DetectionRecord& r) {
    return {r.image_id, r.class_index, r.cx, r.cy, r.w, r.h, r.confidence};
}

// Random evaluation instance: up to `max_images` images, `classes` classes,
// boxes jittered so some overlap and some don't.
void random_instance(Rng& rng, int classes, int max_images, std::vector<DetectionRecord>& gts,
                     std::vector<DetectionRecord>& preds) {
    gts.clear();
    preds.clear();
    int images = 1 + static_cast<int>(rng.uniform_int(max_images));
    for (int img = 0; img < images; ++img) {
        std::string id = "img" + std::to_string(img);
        int n_gt = static_cast<int>(rng.uniform_int(8));
        for (int g = 0; g < n_gt; ++g) {
            double w = rng.uniform(0.05, 0.3), h = rng.uniform(0.05, 0.3);
            double cx = rng.uniform(w / 2, 1 - w / 2), cy = rng.uniform(h / 2, 1 - h / 2);
            int cls = static_cast<int>(rng.uniform_int(classes));
            gts.push_back(det(id, cls, cx, cy, w, h));
            // A prediction near this gt with random quality, sometimes the
            // wrong class, sometimes missing.
            if (rng.uniform() < 0.8) {
                double jitter = rng.uniform(0.0, 0.1);
                int pcls = rng.uniform() < 0.85 ? cls : static_cast<int>(rng.uniform_int(classes));
                double px = std::clamp(cx + rng.uniform(-jitter, jitter), w / 2, 1 - w / 2);
                double py = std::clamp(cy + rng.uniform(-jitter, jitter), h / 2, 1 - h / 2);
                preds.push_back(det(id, pcls, px, py, w, h, rng.uniform(0.05, 1.0)));
            }
        }
        int n_fp = static_cast<int>(rng.uniform_int(4));
        for (int f = 0; f < n_fp; ++f) {
            double w = rng.uniform(0.05, 0.2), h = rng.uniform(0.05, 0.2);
            preds.push_back(det(id, static_cast<int>(rng.uniform_int(classes)),
                                rng.uniform(w / 2, 1 - w / 2), rng.uniform(h / 2, 1 - h / 2), w, h,
                                rng.uniform(0.05, 1.0)));
        }
    }
}

}  // namespace

TEST_CASE("iou") {
    SECTION("identical boxes give 1, disjoint give 0") {
        DetectionRecord a = det("i", 0, 0.5, 0.5, 0.2, 0.2);
        CHECK(eval::iou(a, a) == 1.0);
        DetectionRecord b = det("i", 0, 0.1, 0.1, 0.1, 0.1);
        CHECK(eval::iou(a, b) == 0.0);
    }
    SECTION("corner overlap is 1/7") {
        // Corner boxes (0,0)-(2,2) and (1,1)-(3,3), scaled onto the unit plane.
        DetectionRecord a = det("i", 0, 0.1, 0.1, 0.2, 0.2);
        DetectionRecord b = det("i", 0, 0.2, 0.2, 0.2, 0.2);
        CHECK(eval::iou(a, b) == Catch::Approx(1.0 / 7.0).epsilon(1e-12));
    }
    SECTION("symmetry and self-identity over random boxes") {
        Rng rng = make_stream(61, 0);
        for (int i = 0; i < 300; ++i) {
            DetectionRecord a = det("i", 0, rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                                    rng.uniform(0.05, 0.4), rng.uniform(0.05, 0.4));
            DetectionRecord b = det("i", 0, rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                                    rng.uniform(0.05, 0.4), rng.uniform(0.05, 0.4));
            double ab = eval::iou(a, b);
            CHECK(ab == eval::iou(b, a));
            CHECK(ab >= 0.0);
            CHECK(ab <= 1.0);
            CHECK(eval::iou(a, a) == 1.0);
        }
    }
}

TEST_CASE("match_detections") {
    SECTION("one exact prediction is a TP") {
        DetectionRecord gt = det("i", 0, 0.5, 0.5, 0.2, 0.2);
        DetectionRecord pred = det("i", 0, 0.5, 0.5, 0.2, 0.2, 0.9);
        auto m = eval::match_detections({&pred}, {&gt}, 0.5);
        CHECK(m.pred_to_gt[0] == 0);
    }
    SECTION("two predictions on one gt: only the higher confidence matches") {
        DetectionRecord gt = det("i", 0, 0.5, 0.5, 0.2, 0.2);
        DetectionRecord lo = det("i", 0, 0.5, 0.5, 0.2, 0.2, 0.4);
        DetectionRecord hi = det("i", 0, 0.51, 0.5, 0.2, 0.2, 0.9);
        auto m = eval::match_detections({&lo, &hi}, {&gt}, 0.5);
        CHECK(m.pred_to_gt[0] == -1);  // lower confidence lost the gt
        CHECK(m.pred_to_gt[1] == 0);
    }
    SECTION("each gt matched at most once; ties keep input order") {
        DetectionRecord gt = det("i", 0, 0.5, 0.5, 0.2, 0.2);
        DetectionRecord p1 = det("i", 0, 0.5, 0.5, 0.2, 0.2, 0.7);
        DetectionRecord p2 = det("i", 0, 0.5, 0.5, 0.2, 0.2, 0.7);
        auto m = eval::match_detections({&p1, &p2}, {&gt}, 0.5);
        CHECK(m.pred_to_gt[0] == 0);
        CHECK(m.pred_to_gt[1] == -1);
    }
}

TEST_CASE("average_precision: hand-walked cases") {
    SECTION("single gt, single matching prediction") {
        CHECK(eval::average_precision({{0.9, true}}, 1) == Catch::Approx(1.0));
    }
    SECTION("1 gt, ranked [TP, FP] still gives AP 1 (recall saturates first)") {
        CHECK(eval::average_precision({{0.9, true}, {0.8, false}}, 1) == Catch::Approx(1.0));
    }
    SECTION("1 gt, ranked [FP, TP]: precision at full recall is 1/2") {
        // Envelope: at every recall grid point the best precision at
        // recall >= r is 0.5, so AP = 0.5.
        CHECK(eval::average_precision({{0.9, false}, {0.8, true}}, 1) == Catch::Approx(0.5));
    }
    SECTION("zero gts") {
        CHECK(eval::average_precision({{0.9, false}}, 0) == 0.0);
    }
}

TEST_CASE("map_metrics: trivial contracts") {
    std::vector<DetectionRecord> gts = {det("a", 0, 0.3, 0.3, 0.2, 0.2),
                                        det("a", 1, 0.7, 0.7, 0.2, 0.2),
                                        det("b", 0, 0.5, 0.5, 0.4, 0.4)};
    SECTION("perfect predictions give exactly 1 everywhere") {
        std::vector<DetectionRecord> preds = gts;
        for (auto& p : preds) p.confidence = 1.0;
        eval::MetricsReport m = eval::map_metrics(preds, gts);
        CHECK(m.map50 == 1.0);
        CHECK(m.map50_95 == 1.0);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.tp == 3);
        CHECK(m.fp == 0);
        CHECK(m.fn == 0);
    }
    SECTION("no predictions: flagged zero precision, zero recall, zero mAP") {
        eval::MetricsReport m = eval::map_metrics({}, gts);
        CHECK(m.no_predictions);
        CHECK(m.precision == 0.0);
        CHECK(m.recall == 0.0);
        CHECK(m.map50 == 0.0);
    }
    SECTION("per-class tp+fn equals the gt count") {
        Rng rng = make_stream(62, 0);
        std::vector<DetectionRecord> rgts, rpreds;
        random_instance(rng, 4, 6, rgts, rpreds);
        eval::MetricsReport m = eval::map_metrics(rpreds, rgts);
        for (const auto& cm : m.per_class) {
            if (cm.skipped) continue;
            CHECK(cm.tp + cm.fn == cm.gt_count);
        }
    }
}

TEST_CASE("oracle equivalence on randomized instances") {
    Rng rng = make_stream(63, 0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<DetectionRecord> gts, preds;
        random_instance(rng, 1 + static_cast<int>(rng.uniform_int(5)), 10, gts, preds);

        std::vector<oracle::ODet> ogts, opreds;
        for (const auto& g : gts) ogts.push_back(to_oracle(g));
        for (const auto& p : preds) opreds.push_back(to_oracle(p));

        eval::MetricsReport mine = eval::map_metrics(preds, gts);
        oracle::OracleResult ref = oracle::evaluate(opreds, ogts);

        INFO("trial " << trial << " gts " << gts.size() << " preds " << preds.size());
        CHECK(std::abs(mine.map50 - ref.map50) < 1e-9);
        CHECK(std::abs(mine.map50_95 - ref.map50_95) < 1e-9);
        CHECK(std::abs(mine.precision - ref.precision) < 1e-9);
        CHECK(std::abs(mine.recall - ref.recall) < 1e-9);
    }
}

TEST_CASE("AP monotonicity properties") {
    Rng rng = make_stream(64, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<DetectionRecord> gts, preds;
        random_instance(rng, 3, 4, gts, preds);
        eval::MetricsReport base = eval::map_metrics(preds, gts);

        // Adding a brand-new perfectly matched gt+pred pair never lowers mAP@50.
        std::vector<DetectionRecord> gts2 = gts, preds2 = preds;
        gts2.push_back(det("extra", 0, 0.5, 0.5, 0.2, 0.2));
        preds2.push_back(det("extra", 0, 0.5, 0.5, 0.2, 0.2, 1.0));
        // (adds recall at precision 1 on a fresh image)
        eval::MetricsReport more_tp = eval::map_metrics(preds2, gts2);
        CHECK(more_tp.map50 >= base.map50 - 1e-12);

        // Adding a lowest-confidence unmatched FP never raises any AP.
        std::vector<DetectionRecord> preds3 = preds;
        preds3.push_back(det("img0", 1, 0.93, 0.93, 0.1, 0.1, 1e-4));
        eval::MetricsReport more_fp = eval::map_metrics(preds3, gts);
        CHECK(more_fp.map50 <= base.map50 + 1e-12);
    }
}

TEST_CASE("failure_analysis") {
    SECTION("gt with no overlapping prediction is missed") {
        std::vector<DetectionRecord> gts = {det("a", 0, 0.3, 0.3, 0.2, 0.2)};
        eval::FailureReport f = eval::failure_analysis({}, gts);
        CHECK(f.missed == 1);
        CHECK(f.wrong == 0);
        CHECK(f.background_fp == 0);
    }
    SECTION("wrong detection: class A prediction on a class B gt") {
        std::vector<DetectionRecord> gts = {det("a", 1, 0.5, 0.5, 0.3, 0.3)};  // class B = 1
        std::vector<DetectionRecord> preds = {det("a", 0, 0.5, 0.52, 0.3, 0.3, 0.9)};  // IoU ~0.87
        eval::FailureReport f = eval::failure_analysis(preds, gts);
        CHECK(f.wrong == 1);
        CHECK(f.missed == 0);
        CHECK(f.confusion.at({1, 0}) == 1);
    }
    SECTION("gear1 predicted as gear2 (toy confusion instance)") {
        // Class indices: gear1 = 4, gear2 = 5.
        std::vector<DetectionRecord> gts = {det("s3_img", 4, 0.4, 0.6, 0.25, 0.25)};
        std::vector<DetectionRecord> preds = {det("s3_img", 5, 0.4, 0.6, 0.25, 0.25, 0.92)};
        eval::FailureReport f = eval::failure_analysis(preds, gts);
        CHECK(f.confusion.at({4, 5}) == 1);
        CHECK(f.wrong == 1);
    }
    SECTION("background false positive") {
        std::vector<DetectionRecord> gts = {det("a", 0, 0.2, 0.2, 0.1, 0.1)};
        std::vector<DetectionRecord> preds = {det("a", 0, 0.8, 0.8, 0.1, 0.1, 0.9)};
        eval::FailureReport f = eval::failure_analysis(preds, gts);
        CHECK(f.background_fp == 1);
        CHECK(f.missed == 1);
    }
    SECTION("partition: per class, missed + wrong-as-gt + tp = gt count") {
        Rng rng = make_stream(65, 0);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<DetectionRecord> gts, preds;
            random_instance(rng, 4, 5, gts, preds);
            eval::EvalConfig config;
            eval::MetricsReport m = eval::map_metrics(preds, gts, config);
            eval::FailureReport f = eval::failure_analysis(preds, gts, config);
            uint64_t wrong_as_gt = 0;
            for (const auto& [pair, count] : f.confusion) wrong_as_gt += count;
            CHECK(f.missed + wrong_as_gt + m.tp == gts.size());
        }
    }
}

TEST_CASE("loaders") {
    auto dir = testsupport::make_temp_dir("evalio");
    namespace fs = std::filesystem;

    SECTION("ground truth directory with an empty file") {
        fs::create_directories(dir / "labels");
        testsupport::write_text(dir / "labels" / "img1.txt", "");
        testsupport::write_text(dir / "labels" / "img2.txt", "0 0.5 0.5 0.2 0.2\n");
        auto records = eval::load_ground_truth((dir / "labels").string());
        REQUIRE(records.size() == 1);
        CHECK(records[0].image_id == "img2");
        CHECK(records[0].confidence == 1.0);
    }
    SECTION("prediction line with trailing confidence") {
        fs::create_directories(dir / "preds");
        testsupport::write_text(dir / "preds" / "img1.txt", "1 0.5 0.5 0.2 0.2 0.93\n");
        auto records = eval::load_predictions((dir / "preds").string());
        REQUIRE(records.size() == 1);
        CHECK(records[0].class_index == 1);
        CHECK(records[0].confidence == Catch::Approx(0.93));
    }
    SECTION("single-file variant with image ids") {
        testsupport::write_text(dir / "all.txt",
                                "imgA 0 0.5 0.5 0.2 0.2 0.9\n"
                                "imgB 1 0.25 0.25 0.1 0.1 0.3\n");
        auto records = eval::load_predictions((dir / "all.txt").string());
        REQUIRE(records.size() == 2);
        CHECK(records[1].image_id == "imgB");
    }
    SECTION("out-of-range value names the field, file and line") {
        fs::create_directories(dir / "bad");
        testsupport::write_text(dir / "bad" / "img.txt", "0 1.2 0.5 0.2 0.2 0.9\n");
        CHECK_THROWS_WITH(eval::load_predictions((dir / "bad").string()),
                          Catch::Matchers::ContainsSubstring("cx") &&
                              Catch::Matchers::ContainsSubstring("img.txt:1"));
    }
    SECTION("malformed line is rejected with context") {
        fs::create_directories(dir / "bad2");
        testsupport::write_text(dir / "bad2" / "img.txt", "0 0.5 abc\n");
        CHECK_THROWS_WITH(eval::load_ground_truth((dir / "bad2").string()),
                          Catch::Matchers::ContainsSubstring("img.txt:1"));
    }
}
